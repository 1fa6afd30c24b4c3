"""
Pydantic models for the laboratory configuration.

The TOML configuration tree maps one-to-one onto these models:
[gas] [wave] [profile] [solver] [initial] [sweep] [verify].
"""

from __future__ import annotations

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Exponent ledger defaults
DEFAULT_A1 = 0.75
DEFAULT_A2 = 0.25
DEFAULT_B = 1.0 / 6.0


class GasModel(BaseModel):
    """Ideal polytropic gas with ε-scaled viscosity and heat conductivity base constants."""

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    gamma: float = Field(default=1.4, gt=1.0, description="Ratio of specific heats")
    R: float = Field(default=1.0, gt=0.0, description="Gas constant")
    A: float = Field(default=1.0, gt=0.0, description="Entropy normalization constant")
    mu: float = Field(default=1.0, gt=0.0, description="Shear viscosity base constant")
    lam: float = Field(default=0.0, alias="lambda", description="Bulk viscosity base constant")
    kappa: float = Field(default=1.0, gt=0.0, description="Heat conductivity base constant")

    @model_validator(mode="after")
    def _check_viscosity(self) -> GasModel:
        if 2.0 * self.mu + 3.0 * self.lam < 0.0:
            raise ValueError("2*mu + 3*lambda must be nonnegative")
        return self

    @property
    def viscosity(self) -> float:
        """Longitudinal viscosity 2μ + λ."""
        return 2.0 * self.mu + self.lam


class WaveSection(BaseModel):
    """Left state of the 3-rarefaction wave and the right velocity it expands to."""

    model_config = ConfigDict(extra="forbid")

    rho_minus: float = Field(default=1.0, gt=0.0)
    v_minus: float = 0.0
    theta_minus: float = Field(default=1.0, gt=0.0)
    v_plus: float = 0.5

    @model_validator(mode="after")
    def _check_expanding(self) -> WaveSection:
        if self.v_plus < self.v_minus:
            raise ValueError("v_plus must not be below v_minus (3-rarefaction waves expand)")
        return self


class ProfileSection(BaseModel):
    """Composite profile construction (profile subcommand)."""

    model_config = ConfigDict(extra="forbid")

    eps: float = Field(default=0.01, ge=0.0, lt=1.0)
    b: float = Field(default=DEFAULT_B, gt=0.0)
    delta: float | None = Field(default=None, gt=0.0, description="Explicit smoothing width; overrides the rule")
    T: float = Field(default=1.0, gt=0.0)
    cells_per_delta: int = Field(default=24, ge=16)
    snapshots_per_unit: int = Field(default=20, ge=1)
    norm_p: list[float] = Field(default_factory=lambda: [1.0, 2.0, math.inf])

    @field_validator("norm_p")
    @classmethod
    def _check_p(cls, value: list[float]) -> list[float]:
        for p in value:
            if p not in (1.0, 2.0, math.inf):
                raise ValueError(f"unsupported norm exponent {p}; use 1, 2 or inf")
        return value


class SolverSection(BaseModel):
    """Finite-volume run settings (simulate subcommand and sweep template)."""

    model_config = ConfigDict(extra="forbid")

    mode: Literal["1d", "slab"] = "1d"
    eps: float = Field(default=0.01, ge=0.0, lt=1.0)
    T: float = Field(default=1.0, gt=0.0)
    h: float = Field(default=0.1, gt=0.0, description="Start of the diagnostic window [h, T]")
    cfl: float = Field(default=0.45, gt=0.0, le=0.9)
    flux: Literal["hllc", "rusanov"] = "hllc"
    n_cells: int | None = Field(default=None, ge=64)
    cells_per_delta: int = Field(default=24, ge=4)
    x_left: float | None = None
    x_right: float | None = None
    n2: int = Field(default=8, ge=1)
    period2: float = Field(default=1.0, gt=0.0)
    snapshots_per_unit: int = Field(default=20, ge=1)

    @model_validator(mode="after")
    def _check_domain(self) -> SolverSection:
        if self.x_left is not None and self.x_right is not None and self.x_left >= self.x_right:
            raise ValueError("x_left must be smaller than x_right")
        return self


class InitialSection(BaseModel):
    """Initial data descriptor."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["profile", "riemann", "constant"] = "profile"
    perturbation: bool = False
    perturbation_scale: float = Field(default=1.0, ge=0.0)
    transverse_amplitude: float = Field(default=0.0, ge=0.0)
    transverse_mode: int = Field(default=1, ge=1)
    seed: int = 0


class SweepSection(BaseModel):
    """ε-sweep settings together with the exponent ledger (a₁, a₂, b)."""

    model_config = ConfigDict(extra="forbid")

    eps_list: list[float] = Field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    b_exponent: float = DEFAULT_B
    a1: float = DEFAULT_A1
    a2: float = DEFAULT_A2
    T: float = Field(default=1.0, gt=0.0)
    h: float = Field(default=0.1, gt=0.0)
    cells_per_delta: int = Field(default=24, ge=8)
    snapshots_per_unit: int = Field(default=20, ge=1)
    scheme_error_check: bool = True
    scheme_error_threshold: float = Field(default=0.2, gt=0.0)
    workers: int | None = Field(default=None, ge=1)

    @field_validator("eps_list")
    @classmethod
    def _check_eps_list(cls, value: list[float]) -> list[float]:
        if not value:
            raise ValueError("eps_list must not be empty")
        for eps in value:
            if not 0.0 < eps < 1.0:
                raise ValueError(f"every eps must lie in (0, 1), got {eps}")
        for earlier, later in zip(value, value[1:], strict=False):
            if later >= earlier:
                raise ValueError("eps_list must be strictly decreasing")
        return value

    @model_validator(mode="after")
    def _check_ledger(self) -> SweepSection:
        check_exponent_ledger(self.a1, self.a2, self.b_exponent)
        if self.h >= self.T:
            raise ValueError("diagnostic window is empty: h must be smaller than T")
        return self


class VerifySection(BaseModel):
    """Property-suite settings."""

    model_config = ConfigDict(extra="forbid")

    suite: str = "all"
    n_random: int = Field(default=1000, ge=10)
    seed: int = 0


class LabConfig(BaseModel):
    """Complete, validated laboratory configuration."""

    model_config = ConfigDict(extra="forbid")

    gas: GasModel = Field(default_factory=GasModel)
    wave: WaveSection = Field(default_factory=WaveSection)
    profile: ProfileSection = Field(default_factory=ProfileSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    sweep: SweepSection = Field(default_factory=SweepSection)
    verify: VerifySection = Field(default_factory=VerifySection)

    def sweep_spec(self) -> SweepSpec:
        """Combine the sweep section with the physical and solver template sections."""
        return SweepSpec(
            **self.sweep.model_dump(),
            gas=self.gas,
            wave=self.wave,
            solver=self.solver,
            initial=self.initial,
        )


class SweepSpec(SweepSection):
    """Everything one ε-sweep needs; identical specs give identical reports."""

    gas: GasModel = Field(default_factory=GasModel)
    wave: WaveSection = Field(default_factory=WaveSection)
    solver: SolverSection = Field(default_factory=SolverSection)
    initial: InitialSection = Field(default_factory=InitialSection)


def check_exponent_ledger(a1: float, a2: float, b: float) -> None:
    """
    Enforce the exponent ledger of the a priori assumptions.

    Raises:
        ValueError naming the violated inequality
    """
    if a2 < 0.25:
        raise ValueError(f"exponent ledger violated: a2 >= 1/4 (got a2={a2})")
    if not 0.0 < b <= (2.0 - 2.0 * a2) / 9.0 + 1e-15:
        raise ValueError(f"exponent ledger violated: 0 < b <= (2 - 2*a2)/9 (got b={b}, a2={a2})")
    if 2.0 * a1 < 3.0 - 6.0 * a2 - 1e-15:
        raise ValueError(f"exponent ledger violated: 2*a1 >= 3 - 6*a2 (got a1={a1}, a2={a2})")
