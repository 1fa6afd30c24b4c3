"""
Rarefaction Lab

Numerical laboratory for the vanishing dissipation limit of the compressible
Navier-Stokes-Fourier system towards the planar 3-rarefaction wave.
Builds the smooth rarefaction + hyperbolic wave profile, simulates the
ε-scaled viscous system and measures the decay laws and convergence rates.
"""

__version__ = "0.4.0"
