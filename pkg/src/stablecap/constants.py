"""The constants ``vdw(i) = i!/i^i`` and ``G(i) = ((i-1)/i)^(i-1)``.

Both are returned as exact fractions for ``i <= EXACT_MAX`` and as floats
beyond that.  ``G(i) = vdw(i) / vdw(i-1)``, so the ``G`` values telescope to
``vdw``.
"""

from __future__ import annotations

import math
from fractions import Fraction

EXACT_MAX = 20


def vdw(i: int) -> Fraction | float:
    if i < 1:
        raise ValueError(f"vdw is defined for i >= 1, got {i}")
    if i <= EXACT_MAX:
        return Fraction(math.factorial(i), i**i)
    return math.exp(math.lgamma(i + 1) - i * math.log(i))


def G(i: int) -> Fraction | float:
    """``((i-1)/i)^(i-1)``; ``G(1) = 1``.

    Degrees 0 and below (a variable absent from the support) also map to 1 so
    that degenerate cascade steps carry a neutral factor.
    """
    if i <= 1:
        return Fraction(1)
    if i <= EXACT_MAX:
        return Fraction((i - 1) ** (i - 1), i ** (i - 1))
    return math.exp((i - 1) * math.log1p(-1.0 / i))


def constants(i: int) -> tuple[Fraction | float, Fraction | float]:
    return vdw(i), G(i)
