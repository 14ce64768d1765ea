"""Wave front set detection for variable-coefficient Schrödinger equations.

Wave packet transforms, Hamiltonian orbits of the principal symbol, a
reference propagator and a phase-space detector for microlocal singularities.
"""

from ._kernels import HAVE_EXTENSION, backend
from .errors import (
    ConfigError,
    DerivativeOrderError,
    DimensionError,
    FlowError,
    NormDriftError,
    NyquistError,
    QuadratureError,
    WFSetError,
    WindowError,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_EXTENSION",
    "backend",
    "ConfigError",
    "DerivativeOrderError",
    "DimensionError",
    "FlowError",
    "NormDriftError",
    "NyquistError",
    "QuadratureError",
    "WFSetError",
    "WindowError",
]
