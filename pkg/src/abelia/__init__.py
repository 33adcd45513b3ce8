"""Abelian embeddings, path tricks and Fourier tools for 3-wise correlations."""

from .errors import (AbeliaError, ArgumentError, DomainError, FileError, InvariantViolation,
                     ParseError, PreconditionError, ResourceError, SearchFailure)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "AbeliaError", "ArgumentError", "BACKEND", "DomainError", "FileError", "InvariantViolation",
    "ParseError", "PreconditionError", "ResourceError", "SearchFailure",
]
