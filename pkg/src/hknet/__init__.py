"""Finite lattice nets of matrix algebras: duality, no-signalling and modular theory."""

__version__ = "0.1.0"

from .errors import HKNetError  # noqa: E402,F401
from .numerics import Tolerance, use_tolerance  # noqa: E402,F401
