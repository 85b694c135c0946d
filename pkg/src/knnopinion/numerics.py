"""Scalar arithmetic with two interchangeable backends.

Exact backend: fractions.Fraction, always in canonical reduced form with a
positive denominator, arbitrary-precision integers underneath (repeated
division by k grows denominators like k**t, so fixed-width would overflow
within tens of steps).

Float backend: IEEE-754 binary64.

IMPORTANT: float comparisons are exact binary comparisons, with NO epsilon.
Ties between independently drawn random floats have probability zero, and
constructed ties (the tie-break counterexamples) must use the exact backend.
A configuration never mixes the two backends.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence, Union

Scalar = Union[Fraction, float]

EXACT = "exact"
FLOAT = "float"


class BackendError(TypeError):
    """Raised when exact and float scalars are mixed in one operation."""


class EmptyAggregationError(ValueError):
    """Raised when an aggregate (mean, min, max) is asked of zero values."""


def backend_of(value: Scalar) -> str:
    if isinstance(value, bool):
        raise BackendError("bool is not a scalar opinion")
    if isinstance(value, Fraction):
        return EXACT
    if isinstance(value, float):
        return FLOAT
    if isinstance(value, int):
        return EXACT  # ints are exact values
    raise BackendError(f"unsupported scalar type {type(value).__name__}")


def coerce_all(values: Sequence) -> tuple[list, str]:
    """Normalize a sequence to one backend.

    Plain ints follow the backend of the other entries (default: exact).
    Mixing Fraction and float raises BackendError.
    """
    has_float = False
    has_exact = False
    for v in values:
        b = backend_of(v)
        if b == FLOAT:
            has_float = True
        elif isinstance(v, Fraction):
            has_exact = True
    if has_float and has_exact:
        raise BackendError("cannot mix exact and float scalars")
    if has_float:
        return [float(v) for v in values], FLOAT
    return [v if isinstance(v, Fraction) else Fraction(v) for v in values], EXACT


def same_backend(a: Scalar, b: Scalar) -> str:
    ba, bb = backend_of(a), backend_of(b)
    if isinstance(a, int) and not isinstance(a, Fraction):
        ba = bb
    if isinstance(b, int) and not isinstance(b, Fraction):
        bb = ba
    if ba != bb:
        raise BackendError("cannot mix exact and float scalars")
    return ba


def mean_of(values: Sequence[Scalar]) -> Scalar:
    """Arithmetic mean. Exact backend returns the exact rational mean.

    Two guards matter for the dynamics:
    - if all values are identical the common value is returned untouched,
      so a homogeneous neighborhood is a bit-exact fixed point under floats;
    - the float mean is clamped to [min(values), max(values)] so rounding can
      never push an updated opinion outside its neighborhood hull.
    """
    if len(values) == 0:
        raise EmptyAggregationError("empty aggregation")
    first = values[0]
    if all(v == first for v in values[1:]):
        return first
    vals, kind = coerce_all(values)
    total = sum(vals)
    if kind == EXACT:
        return Fraction(total, len(vals)) if isinstance(total, int) else total / len(vals)
    m = total / len(vals)
    lo, hi = min(vals), max(vals)
    return min(max(m, lo), hi)


def abs_diff(a: Scalar, b: Scalar) -> Scalar:
    same_backend(a, b)
    d = a - b
    return -d if d < 0 else d


def parse_scalar(raw) -> Scalar:
    """Parse a scalar from a JSON value.

    "p/q" strings and ints are exact; JSON floats are float-backend.
    """
    if isinstance(raw, str):
        if "/" in raw:
            num, den = raw.split("/", 1)
            return Fraction(int(num.strip()), int(den.strip()))
        return Fraction(int(raw.strip()))
    if isinstance(raw, bool):
        raise BackendError("bool is not a scalar opinion")
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, float):
        return raw
    raise BackendError(f"cannot parse scalar from {raw!r}")


def format_scalar(value: Scalar) -> str:
    """Serialize: rationals as "p/q" (q always present), floats as decimal
    text with 17 significant digits (round-trip exact)."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return f"{value}/1"
    return format(value, ".17g")
