"""
Unit tests for errors module.
Tests the mapping from exceptions to command-line exit codes.
"""

import pytest

from rarefaction_lab.errors import (
    EXIT_DIVERGENCE,
    EXIT_USAGE,
    ConfigurationError,
    DivergenceError,
    DomainError,
    FitError,
    exit_code_for,
)


class TestExitCodeFor:
    @pytest.mark.parametrize(
        "error",
        [ConfigurationError("bad", field="solver.cfl"), DomainError("rho <= 0"), FitError("too few samples")],
    )
    def test_usage_errors(self, error):
        """Configuration and input errors exit with 2"""
        assert exit_code_for(error) == EXIT_USAGE == 2

    def test_divergence(self):
        assert exit_code_for(DivergenceError("non-finite state", 0.5)) == EXIT_DIVERGENCE == 3

    def test_foreign_exception_counts_as_runtime_failure(self):
        """Exceptions outside the hierarchy map to the divergence code"""
        assert exit_code_for(RuntimeError("boom")) == EXIT_DIVERGENCE

    def test_divergence_message_carries_time(self):
        error = DivergenceError("non-finite state", 0.25, {"min_rho": -1.0})
        assert "t=0.25" in str(error)
        assert error.diagnostics == {"min_rho": -1.0}
