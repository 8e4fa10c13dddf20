"""Number handling shared by all modules.

One-dimensional models run entirely in :class:`fractions.Fraction` so that the
worked circle examples come out exactly; anything needing square roots falls
back to floats.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

Number = "int | float | Fraction"


def parse_number(value, *, snap: bool = False):
    """Read a JSON/CLI scalar into an int, Fraction or float.

    Strings such as ``"2/3"`` are exact. Floats are replaced by the simplest
    rational that round-trips to the same double (``0.6666666666666666`` reads
    as ``2/3``). With ``snap`` a decimal within 1e-4 (relative) of a fraction
    with denominator at most 1000 is replaced by that fraction, so that a
    command-line ``0.3333`` means one third.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers")
    if isinstance(value, (int, Fraction)):
        exact = Fraction(value)
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {value!r}")
        exact = Fraction(value)
        cand = exact.limit_denominator(10**6)
        if float(cand) == value:
            exact = cand
    elif isinstance(value, str):
        text = value.strip()
        try:
            exact = Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number {value!r}") from exc
    else:
        raise TypeError(f"cannot parse number {value!r}")
    if snap:
        cand = exact.limit_denominator(1000)
        if abs(cand - exact) <= Fraction(1, 10**4) * max(1, abs(exact)):
            exact = cand
    return normalize(exact)


def normalize(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def exact_sqrt(x):
    """Square root, exact when ``x`` is a rational perfect square."""
    if x < 0:
        raise ValueError("negative argument")
    if is_exact(x):
        q = Fraction(x)
        rn, rd = math.isqrt(q.numerator), math.isqrt(q.denominator)
        if rn * rn == q.numerator and rd * rd == q.denominator:
            return normalize(Fraction(rn, rd))
    return math.sqrt(x)


def jsonable(x):
    """Convert numbers (and containers of numbers) for ``json.dumps``."""
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return x
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else float(x)
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if hasattr(x, "item"):
        return jsonable(x.item())
    return x


def exact_str(x) -> str:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return repr(x) if isinstance(x, float) else str(x)
