"""Mixed-norm operator norms of random matrices with a variance profile."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConfigurationError,
    DegenerateInputError,
    DomainError,
    ExponentPair,
    GnormError,
    NormEstimate,
    NumericError,
    ResourceError,
    VarianceProfile,
)

__all__ = [
    "ConfigurationError",
    "DegenerateInputError",
    "DomainError",
    "ExponentPair",
    "GnormError",
    "NormEstimate",
    "NumericError",
    "ResourceError",
    "VarianceProfile",
    "__version__",
]
