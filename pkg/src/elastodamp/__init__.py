"""Spectral laboratory for 3D elastic waves with fractional damping.

Modules:
    model       physical parameters, zones, analytic initial data
    symbol      Fourier-symbol matrices, dispersion roots, expansions
    propagator  exact per-mode evolution, spectral quadrature, energies
    decay_lab   decay-rate predictions and measured slope fits
    diffusion   parabolic reference systems and decay-gap measurements
    exponents   critical-exponent and loss-of-decay calculus
    semilinear  pseudospectral solver for the weakly coupled system
    cli         command-line entry point
"""

__version__ = "0.1.0"
