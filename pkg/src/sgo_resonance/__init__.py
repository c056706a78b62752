"""Resonance energy migration between plate regions.

Submodules
----------
specfun
    Real-order Bessel functions ``J_p``, ``I_p`` and their derivatives.
plate
    Compressed Kirchhoff plate: Theta parametrisation, modes, dispersion residuals.
resonance
    Root isolation and tuning of the active zone against its complement.
beats
    Weakly coupled oscillators: spectra, Cauchy evolution, beats, transfer.
card
    Time-spectral cards from displacement records.
"""
__version__ = "0.1.0"

from .errors import (
    BucklingError,
    NumericalError,
    PoleDenseError,
    PoleError,
    ResonanceUnreachableError,
    RootNotFoundError,
)

__all__ = [
    "__version__",
    "NumericalError",
    "PoleError",
    "RootNotFoundError",
    "PoleDenseError",
    "BucklingError",
    "ResonanceUnreachableError",
]
