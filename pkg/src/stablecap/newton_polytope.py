"""Exact membership of a lattice point in the convex hull of exponent vectors.

Decides whether ``target`` lies outside, on the relative boundary of, or in
the relative interior of ``conv(points)`` with a two-phase revised simplex
over ``Fraction``, so the verdict does not depend on rounding.

The LP used is::

    maximize  eps
    s.t.      sum_r nu_r * r + eps * sum_r r = target
              sum_r nu_r      + eps * N     = 1
              nu, eps >= 0

i.e. ``lambda_r = nu_r + eps`` is a convex combination hitting ``target``
with every weight at least ``eps``.  Feasible means ``target`` is in the
hull; a positive optimum means every support point carries positive weight,
which is exactly relative-interior membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .errors import NumericError

OUTSIDE = "outside"
BOUNDARY = "boundary"
INTERIOR = "interior"


@dataclass(frozen=True)
class HullVerdict:
    status: str
    weights: tuple[Fraction, ...] | None = None
    min_weight: Fraction = Fraction(0)
    method: str = "lp"
    pivots: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def member(self) -> bool:
        return self.status != OUTSIDE


def _lcm_denominator(vals) -> int:
    L = 1
    for v in vals:
        d = v.denominator
        L = L * d // math.gcd(L, d)
    return L


class _RevisedSimplex:
    """Revised simplex over exact rationals for integer constraint data.

    Pricing clears denominators of the dual vector so reduced costs are
    plain integer dot products.  Dantzig's rule is used until a run of
    degenerate pivots, then Bland's rule until progress resumes.
    """

    def __init__(self, cols: list[tuple[int, ...]], b: list[Fraction], max_pivots: int):
        self.cols = cols
        self.m = len(b)
        self.max_pivots = max_pivots
        self.pivots = 0

    def run(self, cost: list[int], basis: list[int], Binv, xB, allowed) -> None:
        m = self.m
        cols = self.cols
        degenerate_run = 0
        while True:
            y = [sum((cost[basis[i]] * Binv[i][k] for i in range(m)), Fraction(0)) for k in range(m)]
            L = _lcm_denominator(y)
            Y = [int(v * L) for v in y]
            in_basis = set(basis)
            best_j, best_d = None, 0
            bland = degenerate_run > 2 * m
            for j in allowed:
                if j in in_basis:
                    continue
                col = cols[j]
                d = cost[j] * L - sum(Yk * a for Yk, a in zip(Y, col) if a)
                if d > 0:
                    if bland:
                        best_j = j
                        break
                    if d > best_d:
                        best_j, best_d = j, d
            if best_j is None:
                return
            col = cols[best_j]
            u = [sum((Binv[i][k] * a for k, a in enumerate(col) if a), Fraction(0)) for i in range(m)]
            row = None
            for i in range(m):
                if u[i] > 0:
                    ratio = xB[i] / u[i]
                    if row is None or ratio < best_ratio or (ratio == best_ratio and basis[i] < basis[row]):
                        row, best_ratio = i, ratio
            if row is None:
                raise NumericError("LP unbounded; hull LP is bounded by construction")
            degenerate_run = degenerate_run + 1 if best_ratio == 0 else 0
            self._pivot(basis, Binv, xB, u, row, best_j)

    def _pivot(self, basis, Binv, xB, u, row, col) -> None:
        m = self.m
        ur = u[row]
        Binv[row] = [v / ur for v in Binv[row]]
        xB[row] = xB[row] / ur
        for i in range(m):
            if i != row and u[i]:
                f = u[i]
                Binv[i] = [a - f * b for a, b in zip(Binv[i], Binv[row])]
                xB[i] = xB[i] - f * xB[row]
        basis[row] = col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise NumericError("simplex pivot limit exceeded")


def solve_lp(A: Sequence[Sequence[int]], b: Sequence, c: Sequence[int], max_pivots: int = 100_000):
    """Maximize ``c.x`` subject to ``A x = b``, ``x >= 0`` in exact arithmetic.

    ``A`` and ``c`` must be integer valued.  Returns ``(x, value, pivots)``,
    or ``(None, None, pivots)`` when infeasible.
    """
    m, N = len(A), len(c)
    A = [list(map(int, row)) for row in A]
    b = [Fraction(v) for v in b]
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    cols = [tuple(A[i][j] for i in range(m)) for j in range(N)]
    cols += [tuple(int(i == k) for i in range(m)) for k in range(m)]
    lp = _RevisedSimplex(cols, b, max_pivots)
    basis = list(range(N, N + m))
    Binv = [[Fraction(int(i == k)) for k in range(m)] for i in range(m)]
    xB = list(b)
    phase1 = [0] * N + [-1] * m
    lp.run(phase1, basis, Binv, xB, range(N))
    if any(xB[i] != 0 for i in range(m) if basis[i] >= N):
        return None, None, lp.pivots
    in_basis = set(basis)
    for r in range(m):
        if basis[r] < N:
            continue
        for j in range(N):
            if j in in_basis:
                continue
            u = [sum((Binv[i][k] * a for k, a in enumerate(cols[j]) if a), Fraction(0)) for i in range(m)]
            if u[r] != 0:
                in_basis.discard(basis[r])
                lp._pivot(basis, Binv, xB, u, r, j)
                in_basis.add(j)
                break
    cost = [int(v) for v in c] + [0] * m
    lp.run(cost, basis, Binv, xB, range(N))
    x = [Fraction(0)] * N
    for i, bi in enumerate(basis):
        if bi < N:
            x[bi] = xB[i]
    value = sum((cj * xj for cj, xj in zip(cost, x)), Fraction(0))
    return x, value, lp.pivots


def minimal_face(points: Sequence[Sequence[int]], target: Sequence[int]) -> list[int] | None:
    """Indices of the points on the smallest face of ``conv(points)`` containing ``target``.

    A point lies on that face exactly when some convex combination hitting
    ``target`` gives it positive weight.  Each round maximizes the weight on
    points not yet seen with positive weight; a zero optimum means no
    representation reaches them.  ``None`` if ``target`` is outside the hull.
    """
    pts = [tuple(int(v) for v in p) for p in points]
    dim = len(target)
    A = [[p[i] for p in pts] for i in range(dim)]
    A.append([1] * len(pts))
    b = list(target) + [1]
    found: set[int] = set()
    while True:
        c = [0 if j in found else 1 for j in range(len(pts))]
        x, value, _ = solve_lp(A, b, c)
        if x is None:
            return None
        new = {j for j, v in enumerate(x) if v > 0} - found
        found |= new
        if not new:
            return sorted(found)


def hull_position(points: Sequence[Sequence[int]], target: Sequence[int]) -> HullVerdict:
    """Locate ``target`` relative to ``conv(points)`` exactly."""
    pts = [tuple(int(v) for v in p) for p in points]
    if not pts:
        return HullVerdict(OUTSIDE, method="empty")
    dim = len(target)
    N = len(pts)
    col_sum = [sum(p[i] for p in pts) for i in range(dim)]
    A = [[p[i] for p in pts] + [col_sum[i]] for i in range(dim)]
    A.append([1] * N + [N])
    b = list(target) + [1]
    c = [0] * N + [1]
    x, value, pivots = solve_lp(A, b, c)
    if x is None:
        return HullVerdict(OUTSIDE, pivots=pivots)
    eps = x[-1]
    weights = tuple(nu + eps for nu in x[:N])
    # exact self-check of the certificate
    if sum(weights) != 1 or any(
        sum(w * p[i] for w, p in zip(weights, pts)) != target[i] for i in range(dim)
    ):
        raise NumericError("hull certificate failed exact verification")
    return HullVerdict(INTERIOR if eps > 0 else BOUNDARY, weights, eps, pivots=pivots)
