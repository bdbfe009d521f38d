"""Extended-precision toolkit for the unit-strike implied volatility map.

The package is organised around one object: the function F mapping total
volatility x to the normalised time value of a call, together with its
inverse, asymptotics, power-series expansions, and a linear-algebra
search for differential equations satisfied by those series.
"""

from .precision import (
    ConvergenceError,
    DomainError,
    NumericsError,
    PrecisionConfig,
    PrecisionError,
)

__all__ = [
    "PrecisionConfig",
    "NumericsError",
    "DomainError",
    "ConvergenceError",
    "PrecisionError",
]

__version__ = "0.1.0"
