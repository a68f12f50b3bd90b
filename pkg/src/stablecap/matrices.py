"""Polynomials and numbers attached to matrices.

``Prod_A(t) = prod_i sum_j A[i, j] t_j`` and ``Det_A(t) = det(sum_i t_i A_i)``
turn a nonnegative matrix or a PSD tuple into a homogeneous polynomial whose
multilinear coefficient is the permanent or the mixed discriminant.  This
module builds those polynomials, computes the two numbers directly (Ryser,
inclusion-exclusion), keeps slow brute-force oracles next to them, and
enumerates the integer matrices ``Lambda(k, n)``.

Matrices given as nested lists of ``int``/``Fraction`` are handled exactly;
anything else goes through ``float``.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Sequence

import numpy as np

from .errors import ArgumentError, CapacityGuardError, NumericError, ValidationError
from .poly import HomPoly, _add, _mul

PROD_MAX_N = 10
DET_MAX_N = 6
RYSER_MAX_N = 20
NAIVE_MAX_N = 9
MIXED_DISC_MAX_N = 10
LAMBDA_MAX_K = 4
LAMBDA_MAX_N = 5
PSD_RTOL = 1e-10
DET_CLAMP_RTOL = 1e-10


def _rows(A, exact: bool | None = None) -> tuple[list[list], bool]:
    """Nested-list copy of a square matrix and whether it is exact."""
    if isinstance(A, np.ndarray) and A.dtype != object:
        rows = A.tolist()
    else:
        rows = [list(r) for r in A]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise ArgumentError("matrix must be square and non-empty")
    if exact is None:
        exact = all(isinstance(v, Rational) for r in rows for v in r)
    if exact:
        rows = [[Fraction(v) for v in r] for r in rows]
    else:
        rows = [[float(v) for v in r] for r in rows]
    return rows, exact


def check_nonneg(A, exact: bool | None = None) -> tuple[list[list], bool]:
    rows, exact = _rows(A, exact)
    for r in rows:
        for v in r:
            if v < 0 or (not exact and not math.isfinite(v)):
                raise ValidationError(f"matrix entry {v} is not a finite nonnegative number")
    return rows, exact


def ones_matrix(n: int, exact: bool = False):
    """``J_n``, every entry ``1/n``."""
    v = Fraction(1, n) if exact else 1.0 / n
    return [[v] * n for _ in range(n)]


# -- Prod_A --------------------------------------------------------------


def prod_polynomial(A, exact: bool | None = None, max_n: int = PROD_MAX_N) -> HomPoly:
    """Expand the product of the row linear forms of ``A``."""
    rows, exact = check_nonneg(A, exact)
    n = len(rows)
    if n > max_n:
        raise CapacityGuardError(f"Prod_A expansion limited to n <= {max_n}")
    one = Fraction(1) if exact else 1.0
    terms = {(0,) * n: one}
    for r in rows:
        form = {}
        for j, a in enumerate(r):
            if a:
                e = [0] * n
                e[j] = 1
                form[tuple(e)] = a
        if not form:
            return HomPoly.zero(n, n)
        terms = _mul(terms, form)
    return HomPoly(n, n, terms)


# -- permanents ------------------------------------------------------------


def permanent(A, exact: bool | None = None) -> float | Fraction:
    """Ryser's formula with Gray-code subset order, ``O(2^n n)``."""
    rows, exact = check_nonneg(A, exact)
    n = len(rows)
    if n > RYSER_MAX_N:
        raise CapacityGuardError(f"Ryser permanent limited to n <= {RYSER_MAX_N}")
    zero = Fraction(0) if exact else 0.0
    sums = [zero] * n
    total = zero
    in_set = [False] * n
    size = 0
    for k in range(1, 1 << n):
        j = (k & -k).bit_length() - 1
        sign = -1 if in_set[j] else 1
        in_set[j] = not in_set[j]
        size += sign
        for i in range(n):
            sums[i] += sign * rows[i][j]
        prod = sums[0]
        for i in range(1, n):
            if not prod:
                break
            prod *= sums[i]
        total += prod if (n - size) % 2 == 0 else -prod
    return total


def permanent_naive(A, exact: bool | None = None) -> float | Fraction:
    """Sum over all ``n!`` permutations; the reference oracle."""
    rows, exact = check_nonneg(A, exact)
    n = len(rows)
    if n > NAIVE_MAX_N:
        raise CapacityGuardError(f"naive permanent limited to n <= {NAIVE_MAX_N}")
    total = Fraction(0) if exact else 0.0
    for sigma in itertools.permutations(range(n)):
        prod = rows[0][sigma[0]]
        for i in range(1, n):
            prod *= rows[i][sigma[i]]
        total += prod
    return total


# -- PSD tuples, Det_A, mixed discriminants -------------------------------


@dataclass(frozen=True)
class PsdTuple:
    """A tuple of real symmetric PSD matrices, all ``dim x dim``."""

    matrices: tuple
    exact: bool = False

    def __post_init__(self):
        if not self.matrices:
            raise ArgumentError("empty PSD tuple")
        mats = []
        exact = self.exact or all(
            isinstance(v, Rational) for M in self.matrices for r in M for v in r
        )
        for M in self.matrices:
            rows, _ = _rows(M, exact)
            mats.append(tuple(tuple(r) for r in rows))
        dims = {len(M) for M in mats}
        if len(dims) != 1:
            raise ArgumentError("all matrices in a PSD tuple must share a dimension")
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "exact", exact)
        for idx, M in enumerate(mats):
            F = np.array(M, dtype=float)
            if not np.allclose(F, F.T, rtol=0, atol=PSD_RTOL * (1 + np.abs(F).max())):
                raise ValidationError(f"matrix {idx} is not symmetric")
            if exact and any(M[i][j] != M[j][i] for i in range(len(M)) for j in range(i)):
                raise ValidationError(f"matrix {idx} is not exactly symmetric")
            lo = np.linalg.eigvalsh((F + F.T) / 2).min()
            if lo < -PSD_RTOL * (1 + np.linalg.norm(F, 2)):
                raise ValidationError(f"matrix {idx} is not PSD (min eigenvalue {lo:.3e})")

    @property
    def dim(self) -> int:
        return len(self.matrices[0])

    @property
    def size(self) -> int:
        return len(self.matrices)

    def arrays(self) -> list[np.ndarray]:
        return [np.array(M, dtype=float) for M in self.matrices]

    def is_doubly_stochastic(self, tol: float = 1e-9) -> bool:
        """Trace one each and summing to the identity (the set ``D_n``)."""
        arrs = self.arrays()
        if self.size != self.dim:
            return False
        if any(abs(np.trace(M) - 1) > tol for M in arrs):
            return False
        return bool(np.abs(sum(arrs) - np.eye(self.dim)).max() <= tol)

    @classmethod
    def diagonal(cls, A, exact: bool | None = None) -> PsdTuple:
        """``A_i = diag(row i of A)``: its mixed discriminant is ``per(A)``."""
        rows, exact = check_nonneg(A, exact)
        n = len(rows)
        zero = Fraction(0) if exact else 0.0
        mats = []
        for r in rows:
            mats.append([[r[i] if i == j else zero for j in range(n)] for i in range(n)])
        return cls(tuple(mats), exact)

    def to_json_obj(self) -> dict:
        return {"n": self.dim, "matrices": [[[float(v) for v in r] for r in M] for M in self.matrices]}

    @classmethod
    def from_json_obj(cls, obj) -> PsdTuple:
        try:
            n = int(obj["n"])
            mats = obj["matrices"]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed PSD tuple JSON: {exc}") from exc
        if len(mats) != n or any(len(M) != n or any(len(r) != n for r in M) for M in mats):
            raise ValidationError("PSD tuple JSON must hold n matrices of size n x n")
        return cls(tuple(tuple(tuple(r) for r in M) for M in mats))


def det_polynomial(T: PsdTuple, max_n: int = DET_MAX_N) -> HomPoly:
    """Exact expansion of ``det(sum_i t_i A_i)``.

    The permutation sum is organised by column subsets (row ``k`` picks a
    column not yet used), which visits every Leibniz term once while sharing
    common prefixes.  In float mode, coefficients with
    ``|c| <= 1e-10 * max|c|`` are cancellation noise and are dropped.
    """
    if not isinstance(T, PsdTuple):
        T = PsdTuple(tuple(T))
    n, m = T.dim, T.size
    if n > max_n:
        raise CapacityGuardError(f"Det_A expansion limited to n <= {max_n}")
    one = Fraction(1) if T.exact else 1.0
    forms = []
    for r in range(n):
        row = []
        for c in range(n):
            form = {}
            for i, M in enumerate(T.matrices):
                if M[r][c]:
                    e = [0] * m
                    e[i] = 1
                    form[tuple(e)] = M[r][c]
            row.append(form)
        forms.append(row)
    layer = {0: {(0,) * m: one}}
    for r in range(n):
        nxt: dict[int, dict] = {}
        for used, poly in layer.items():
            if not poly:
                continue
            for c in range(n):
                if used >> c & 1 or not forms[r][c]:
                    continue
                sign = -1 if bin(used >> (c + 1)).count("1") % 2 else 1
                key = used | (1 << c)
                nxt[key] = _add(nxt.get(key, {}), _mul(poly, forms[r][c]), sign)
        layer = nxt
    terms = layer.get((1 << n) - 1, {})
    if T.exact:
        if any(c < 0 for c in terms.values()):
            raise NumericError("negative coefficient in exact Det_A expansion; input is not PSD")
        return HomPoly(m, n, terms)
    scale = max((abs(c) for c in terms.values()), default=0.0)
    clean = {}
    for e, c in terms.items():
        if abs(c) <= DET_CLAMP_RTOL * scale:
            continue
        if c < 0:
            raise NumericError(f"coefficient {c:.3e} at {e} is negative beyond rounding")
        clean[e] = c
    return HomPoly(m, n, clean)


def det_polynomial_raw(T: PsdTuple) -> dict:
    """Unclamped float coefficients of ``Det_A`` (for checking the clamping band)."""
    n, m = T.dim, T.size
    total: dict = {}
    for sigma in itertools.permutations(range(n)):
        sign = -1 if sum(1 for i in range(n) for j in range(i) if sigma[j] > sigma[i]) % 2 else 1
        poly = {(0,) * m: 1.0}
        for r in range(n):
            form = {}
            for i, M in enumerate(T.matrices):
                v = float(M[r][sigma[r]])
                if v:
                    e = [0] * m
                    e[i] = 1
                    form[tuple(e)] = v
            poly = _mul(poly, form)
            if not poly:
                break
        total = _add(total, poly, sign)
    return total


def _det(M, exact: bool):
    if not exact:
        return float(np.linalg.det(np.array(M, dtype=float)))
    M = [list(r) for r in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                M[r] = [a - f * b for a, b in zip(M[r], M[c])]
    return det


def mixed_discriminant(T: PsdTuple) -> float | Fraction:
    """``sum_S (-1)^(n-|S|) det(sum_{i in S} A_i)`` over all subsets ``S``."""
    if not isinstance(T, PsdTuple):
        T = PsdTuple(tuple(T))
    n = T.dim
    if T.size != n:
        raise ArgumentError("mixed discriminant needs n matrices of size n x n")
    if n > MIXED_DISC_MAX_N:
        raise CapacityGuardError(f"inclusion-exclusion limited to n <= {MIXED_DISC_MAX_N}")
    if T.exact:
        mats = T.matrices
        zero = Fraction(0)
    else:
        mats = T.arrays()
        zero = 0.0
    total = zero
    for mask in range(1, 1 << n):
        idx = [i for i in range(n) if mask >> i & 1]
        if T.exact:
            S = [[sum((mats[i][r][c] for i in idx), zero) for c in range(n)] for r in range(n)]
        else:
            S = sum(mats[i] for i in idx)
        d = _det(S, T.exact)
        total += d if (n - len(idx)) % 2 == 0 else -d
    return total


# -- Lambda(k, n) ----------------------------------------------------------


def _bounded_compositions(k: int, caps: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Vectors ``v`` with ``sum v = k`` and ``0 <= v_j <= caps[j]``, ascending lex order."""
    n = len(caps)
    suffix = [0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + caps[j]
    out = [0] * n

    def rec(j: int, left: int):
        if j == n - 1:
            if left <= caps[j]:
                out[j] = left
                yield tuple(out)
            return
        lo = max(0, left - suffix[j + 1])
        for v in range(lo, min(left, caps[j]) + 1):
            out[j] = v
            yield from rec(j + 1, left - v)

    if k <= suffix[0]:
        yield from rec(0, k)


def lambda_first_rows(k: int, n: int) -> list[tuple[int, ...]]:
    """Possible first rows, used to shard the enumeration."""
    return list(_bounded_compositions(k, [k] * n))


def enumerate_lambda(
    k: int,
    n: int,
    *,
    k_max: int = LAMBDA_MAX_K,
    n_max: int = LAMBDA_MAX_N,
    first_row: Sequence[int] | None = None,
) -> Iterator[np.ndarray]:
    """All ``n x n`` nonnegative integer matrices with row and column sums ``k``.

    Row-by-row backtracking; a partial matrix is extended only while every
    remaining column sum fits in the rows still to be filled, so no branch
    dead-ends.  Matrices come out in lexicographic order of their rows.
    """
    if k < 1 or n < 1:
        raise ArgumentError("k and n must be positive")
    if k > k_max or n > n_max:
        raise CapacityGuardError(f"Lambda(k, n) enumeration budget is k <= {k_max}, n <= {n_max}")
    rows: list[tuple[int, ...]] = []

    def rec(i: int, col_left: list[int]):
        if i == n - 1:
            rows.append(tuple(col_left))
            yield np.array(rows, dtype=np.int64)
            rows.pop()
            return
        rows_after = n - i - 1
        choices = [tuple(first_row)] if (i == 0 and first_row is not None) else _bounded_compositions(k, col_left)
        for row in choices:
            rest = [c - v for c, v in zip(col_left, row)]
            if any(c < 0 or c > k * rows_after for c in rest):
                continue
            rows.append(row)
            yield from rec(i + 1, rest)
            rows.pop()

    if n == 1:
        yield np.array([[k]], dtype=np.int64)
        return
    yield from rec(0, [k] * n)


def is_lambda_matrix(A, k: int) -> bool:
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    if not np.all(M == np.round(M)) or np.any(M < 0):
        return False
    return bool(np.all(M.sum(axis=0) == k) and np.all(M.sum(axis=1) == k))


# -- special matrices -------------------------------------------------------


def special_matrix_D(n: int, k: int, exact: bool = False):
    """Doubly stochastic matrix with ``k`` rows ``(a, ..., a, b)`` and ``n - k`` rows ``(c, ..., c, 0)``.

    ``b = 1/k``, ``a = (k - 1) / (k (n - 1))``, ``c = 1 / (n - 1)``.  It is
    the equality case of the column-degree permanent bound.
    """
    if not 1 < k <= n - 1:
        raise ArgumentError(f"need 1 < k <= n - 1, got n={n}, k={k}")
    b = Fraction(1, k)
    a = Fraction(k - 1, k * (n - 1))
    c = Fraction(1, n - 1)
    rows = [[a] * (n - 1) + [b] for _ in range(k)] + [[c] * (n - 1) + [Fraction(0)] for _ in range(n - k)]
    if exact:
        return rows
    return np.array(rows, dtype=float)


def sinkhorn(A, tol: float = 1e-13, max_iter: int = 100_000) -> np.ndarray:
    """Alternately normalize rows and columns until both sums are 1 within ``tol``."""
    M = np.array(A, dtype=float)
    if np.any(M < 0):
        raise ValidationError("Sinkhorn scaling needs a nonnegative matrix")
    for _ in range(max_iter):
        M /= M.sum(axis=1, keepdims=True)
        M /= M.sum(axis=0, keepdims=True)
        if np.abs(M.sum(axis=1) - 1).max() <= tol:
            return M
    raise NumericError("Sinkhorn scaling did not converge (matrix may lack total support)")


# -- I/O ---------------------------------------------------------------------


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row and any(s.strip() for s in row)]
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValidationError("matrix CSV must hold n rows of n values")
    M = np.array(rows)
    check_nonneg(M)
    return M


def write_matrix_csv(A, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(A, dtype=float):
            w.writerow([repr(float(v)) for v in row])


def load_psd_tuple(path) -> PsdTuple:
    with open(path) as fh:
        return PsdTuple.from_json_obj(json.load(fh))


def lambda_record(A, per) -> str:
    """One JSON line ``{"matrix": ..., "permanent": ...}``."""
    return json.dumps({"matrix": np.asarray(A).tolist(), "permanent": float(per)})
