"""Finite-truncation laboratory for asymptotic density and description kinds of sets."""

from .density import Fraction, SetStream, density_below, density_profile, fmt
from .literals import parse_set

__all__ = ["Fraction", "SetStream", "density_below", "density_profile", "fmt", "parse_set"]
__version__ = "0.1.0"
