"""Ergodic optimization, transfer functions and discounted cohomological
equations on finite edge shifts and circle rotations."""

from .systems import (
    Coboundary,
    Edge,
    EdgeWeights,
    FiniteSystem,
    Fourier,
    RotationSystem,
    SymbolicPoint,
    SystemSpecError,
    build_finite_system,
    coboundary,
    full_shift,
)

__version__ = "0.1.0"
