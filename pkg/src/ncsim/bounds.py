"""Subspace-collision bound and the expected stopping-time upper bound.

All intermediate sums are exact (``int`` / ``Fraction``); floats appear only
in the returned values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np


class BoundError(ValueError):
    pass


def binom(a: int, b: int) -> int:
    """Binomial coefficient, zero outside 0 <= b <= a (counting convention)."""
    if a < 0 or b < 0 or b > a:
        return 0
    return math.comb(a, b)


def _alternating_sum(n: int, shift: int, lower: int, i: int, N: int) -> int:
    """sum_j (-1)^j C(n, j) C(N(i - j + 1) - shift, lower), over all j where terms survive."""
    total = 0
    j = 0
    # Beyond j = n the first factor vanishes; the upper argument only shrinks with j.
    while j <= n:
        top = N * (i - j + 1) - shift
        if top < 0:
            break
        term = binom(n, j) * binom(top, lower)
        total += -term if j & 1 else term
        j += 1
    return total


@dataclass(frozen=True)
class CollisionBound:
    exact: Fraction | None
    degenerate: bool

    @property
    def raw(self) -> float:
        return math.inf if self.exact is None else float(self.exact)


@lru_cache(maxsize=None)
def p_same_subspace_exact(N: int, i: int) -> CollisionBound:
    """Bound on P(two nodes span the same subspace) once the total dimension gain reaches i(N-1)."""
    if N < 2:
        raise BoundError(f"need N >= 2, got {N}")
    if not 1 <= i <= N - 1:
        raise BoundError(f"stage index i={i} outside 1..{N - 1}")
    den = _alternating_sum(N, i + 1, N - 1, i, N)
    if den == 0:
        return CollisionBound(None, True)
    total = Fraction(0)
    for k in range(1, N):
        weight = Fraction(i, k)
        if N - k - 1 > 0:
            weight = min(weight, Fraction(N - i, N - k - 1))
        num = _alternating_sum(N - 1, i + 2 + k, N - 2, i, N)
        total += weight * Fraction(num, den)
    return CollisionBound(total, total >= 1)


def p_same_subspace_bound(N: int, i: int) -> dict:
    """``{"raw": float, "degenerate": bool, "exact": Fraction | None}``."""
    b = p_same_subspace_exact(N, i)
    return {"raw": b.raw, "degenerate": b.degenerate, "exact": b.exact}


@dataclass(frozen=True)
class BoundResult:
    value: float
    degenerate: bool
    per_i_terms: list = field(default_factory=list)
    sum_reception: float = 0.0

    @property
    def finite(self) -> bool:
        return not self.degenerate and math.isfinite(self.value)


def _off_diagonal_sum(probs: np.ndarray) -> float:
    probs = np.asarray(probs, dtype=float)
    return float(probs.sum() - np.trace(probs))


def bound_from_sum(N: int, sum_reception: float) -> BoundResult:
    """Upper bound on E[T] given N and the sum of off-diagonal reception probabilities."""
    if N < 2:
        raise BoundError(f"the bound needs N >= 2, got {N}")
    if not sum_reception > 0:
        raise BoundError("reception probabilities sum to zero; the radio environment is disconnected")
    terms = [p_same_subspace_exact(N, i) for i in range(1, N)]
    if any(t.degenerate for t in terms):
        return BoundResult(math.inf, True, terms, sum_reception)
    inner = sum((1 / (1 - t.exact) for t in terms), Fraction(0)) + N
    value = 2 * N * (N - 1) * float(inner) / sum_reception
    return BoundResult(value, False, terms, sum_reception)


def expected_stopping_bound(matrix) -> BoundResult:
    """Evaluate the bound for a :class:`~ncsim.radio.ReceptionMatrix` or a plain array."""
    probs = getattr(matrix, "probs", matrix)
    probs = np.asarray(probs, dtype=float)
    return bound_from_sum(probs.shape[0], _off_diagonal_sum(probs))
