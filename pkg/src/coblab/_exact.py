"""Exact parameter handling shared by the checkers."""
from __future__ import annotations

from fractions import Fraction


def rational(x) -> Fraction:
    """Exact value of a parameter; floats are read by their shortest repr (0.4 -> 2/5)."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)
