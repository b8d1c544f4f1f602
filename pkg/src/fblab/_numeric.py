"""Scalar backends: exact rationals and high-precision binary floats.

Every quantity that the bounds depend on is carried either as a
:class:`fractions.Fraction` (the ``rational`` backend) or as an
:class:`mpmath.mpf` with at least ``HIPREC_BITS`` significand bits (the
``hiprec`` backend). Binary64 floats never enter a computation; they are
rejected on input unless the caller opts in.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

import mpmath

HIPREC_BITS = 256
BACKENDS = ("rational", "hiprec")

Scalar = Union[int, Fraction, mpmath.mpf]

INF = math.inf

if mpmath.mp.prec < HIPREC_BITS:
    mpmath.mp.prec = HIPREC_BITS


class InputError(ValueError):
    """Malformed or out-of-range user input."""


class GuardError(RuntimeError):
    """A size guard refused to run an enumeration."""


def exact(x, *, allow_float: bool = False) -> Fraction:
    """Convert ``x`` to a Fraction.

    Strings may be integers, decimals (``0.11``, ``1e-10``) or ``num/den``.
    Floats are converted exactly (their binary value) only when
    ``allow_float`` is set.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise InputError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"not a rational number: {x!r}") from None
    if isinstance(x, mpmath.mpf):
        return mpf_to_fraction(x)
    if isinstance(x, float):
        if not allow_float:
            raise InputError(f"binary float {x!r} given where an exact value is required; pass a string")
        return Fraction(x)
    raise InputError(f"not a number: {x!r}")


def mpf_to_fraction(x: mpmath.mpf) -> Fraction:
    if not mpmath.isfinite(x):
        raise InputError(f"non-finite value {x}")
    man, exp = x.man_exp
    if exp >= 0:
        return Fraction(int(man) << int(exp))
    return Fraction(int(man), 1 << int(-exp))


def hp(x) -> mpmath.mpf:
    """Convert an exact or hiprec scalar to mpf at the current working precision."""
    if isinstance(x, mpmath.mpf):
        return +x
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return mpmath.mpf(x)
    if x == INF:
        return mpmath.inf
    return mpmath.mpf(x)


def to_backend(x, backend: str):
    if backend == "rational":
        return exact(x)
    if backend == "hiprec":
        return hp(exact(x) if isinstance(x, str) else x)
    raise InputError(f"unknown backend {backend!r}; expected one of {BACKENDS}")


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction))


def zero_like(x):
    return mpmath.mpf(0) if isinstance(x, mpmath.mpf) else Fraction(0)


def fmt(x, digits: int = 50) -> str:
    """Decimal string with ``digits`` significant digits, fixed notation.

    Integers and integral Fractions print exactly.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction) and x.denominator == 1:
        return str(x.numerator)
    if x == INF:
        return "inf"
    bits = int(digits * 3.33) + 16
    with mpmath.workprec(max(bits, HIPREC_BITS)):
        v = hp(x)
        if v == 0:
            return "0"
        s = mpmath.nstr(v, digits, min_fixed=-mpmath.inf, max_fixed=mpmath.inf)
    return s


def log2(x) -> mpmath.mpf:
    return mpmath.log(hp(x), 2)


def h2(p) -> mpmath.mpf:
    """Binary entropy in bits; h2(0) = h2(1) = 0."""
    p = hp(p)
    if p == 0 or p == 1:
        return mpmath.mpf(0)
    if p == 0.5:
        return mpmath.mpf(1)
    return -p * mpmath.log(p, 2) - (1 - p) * mpmath.log(1 - p, 2)


def normal_quantile(prob) -> mpmath.mpf:
    """Standard normal quantile, accurate to the working precision.

    Starts from the inverse error function and polishes with Newton steps on
    the tail-accurate normal CDF.
    """
    p = hp(prob)
    if not 0 < p < 1:
        raise InputError("quantile argument must lie in (0, 1)")
    x = -mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * p)
    for _ in range(8):
        step = (mpmath.ncdf(x) - p) / mpmath.npdf(x)
        x -= step
        if abs(step) < mpmath.mpf(2) ** (-mpmath.mp.prec + 8) * (1 + abs(x)):
            break
    return x
