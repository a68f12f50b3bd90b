"""Sparse homogeneous polynomials with nonnegative coefficients.

A polynomial in ``m`` variables of total degree ``n`` is stored as a map from
exponent tuples to coefficients::

    (x1 + x2)**2  ->  {(2, 0): 1, (1, 1): 2, (0, 2): 1}

Coefficients are either Python floats or exact rationals (``int`` /
``Fraction``); every operation keeps the coefficient type it was given, so a
polynomial built from rational data stays exact.  Variables are indexed from
0 in the API; labels (``x1``, ``x2``, ...) are kept for reporting and follow
the variables through :func:`restrict_zero`.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import ArgumentError, CapacityGuardError, ValidationError

Exponent = tuple[int, ...]
Coeff = float | int | Fraction

SUPPORT_CHECK_MAX_VARS = 12


class Monomial(NamedTuple):
    exponents: Exponent
    coefficient: Coeff


def _is_exact(c) -> bool:
    return isinstance(c, Rational)


class HomPoly:
    """Immutable homogeneous polynomial in ``Hom_+(num_vars, degree)``.

    Zero coefficients are dropped on construction; the zero polynomial is
    the one with no terms.
    """

    __slots__ = ("num_vars", "degree", "_terms", "labels", "_E", "_c")

    def __init__(
        self,
        num_vars: int,
        degree: int,
        terms: Mapping[Sequence[int], Coeff] | Iterable[tuple[Sequence[int], Coeff]],
        labels: Sequence[str] | None = None,
    ):
        if num_vars < 1:
            raise ArgumentError(f"num_vars must be >= 1, got {num_vars}")
        if degree < 0:
            raise ArgumentError(f"degree must be >= 0, got {degree}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        clean: dict[Exponent, Coeff] = {}
        for exps, coeff in items:
            key = tuple(int(e) for e in exps)
            if len(key) != num_vars:
                raise ValidationError(f"exponent {key} has {len(key)} entries, expected {num_vars}")
            if any(e < 0 for e in key):
                raise ValidationError(f"negative exponent in {key}")
            if sum(key) != degree:
                raise ValidationError(f"monomial {key} has degree {sum(key)}, expected {degree}")
            if isinstance(coeff, (float, np.floating)):
                coeff = float(coeff)
                if not math.isfinite(coeff):
                    raise ValidationError(f"non-finite coefficient at {key}")
            if coeff < 0:
                raise ValidationError(f"negative coefficient {coeff} at {key}")
            if coeff == 0:
                continue
            clean[key] = clean.get(key, 0) + coeff
        self.num_vars = num_vars
        self.degree = degree
        self._terms = MappingProxyType(dict(sorted(clean.items(), reverse=True)))
        if labels is None:
            labels = tuple(f"x{i + 1}" for i in range(num_vars))
        elif len(labels) != num_vars:
            raise ArgumentError("labels must have one entry per variable")
        self.labels = tuple(labels)
        self._E = None
        self._c = None

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, num_vars: int, degree: int) -> HomPoly:
        return cls(num_vars, degree, {})

    @classmethod
    def monomial(cls, exponents: Sequence[int], coefficient: Coeff = 1) -> HomPoly:
        return cls(len(exponents), sum(exponents), {tuple(exponents): coefficient})

    @classmethod
    def linear_form(cls, coeffs: Sequence[Coeff]) -> HomPoly:
        m = len(coeffs)
        terms = {}
        for i, c in enumerate(coeffs):
            e = [0] * m
            e[i] = 1
            terms[tuple(e)] = c
        return cls(m, 1, terms)

    # -- accessors ----------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Coeff]:
        return self._terms

    def monomials(self) -> Iterator[Monomial]:
        for e, c in self._terms.items():
            yield Monomial(e, c)

    def coefficient(self, exponents: Sequence[int]) -> Coeff:
        return self._terms.get(tuple(exponents), 0)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(c) for c in self._terms.values())

    @property
    def is_square(self) -> bool:
        return self.num_vars == self.degree

    def __len__(self) -> int:
        return len(self._terms)

    def exponent_matrix(self) -> np.ndarray:
        """Support as an ``(N, m)`` integer array, rows in storage order."""
        if self._E is None:
            E = np.array(list(self._terms), dtype=np.int64).reshape(len(self._terms), self.num_vars)
            E.flags.writeable = False
            self._E = E
        return self._E

    def coefficient_vector(self) -> np.ndarray:
        if self._c is None:
            c = np.array([float(v) for v in self._terms.values()], dtype=float)
            c.flags.writeable = False
            self._c = c
        return self._c

    # -- algebra ------------------------------------------------------

    def __eq__(self, other) -> bool:
        if not isinstance(other, HomPoly):
            return NotImplemented
        return (self.num_vars, self.degree, dict(self._terms)) == (
            other.num_vars,
            other.degree,
            dict(other._terms),
        )

    def __hash__(self):
        return hash((self.num_vars, self.degree, tuple(self._terms.items())))

    def __repr__(self) -> str:
        if self.is_zero:
            return f"HomPoly(0; m={self.num_vars}, n={self.degree})"
        parts = []
        for e, c in list(self._terms.items())[:8]:
            mono = "*".join(
                f"{self.labels[i]}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k
            )
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        more = " + ..." if len(self._terms) > 8 else ""
        return f"HomPoly({' + '.join(parts)}{more})"

    def __add__(self, other: HomPoly) -> HomPoly:
        if not isinstance(other, HomPoly):
            return NotImplemented
        if (self.num_vars, self.degree) != (other.num_vars, other.degree):
            raise ArgumentError("can only add polynomials of identical shape")
        return HomPoly(self.num_vars, self.degree, _add(self._terms, other._terms), self.labels)

    def __mul__(self, other) -> HomPoly:
        if isinstance(other, HomPoly):
            if self.num_vars != other.num_vars:
                raise ArgumentError("variable count mismatch")
            return HomPoly(
                self.num_vars, self.degree + other.degree, _mul(self._terms, other._terms), self.labels
            )
        if isinstance(other, (int, float, Fraction)):
            return HomPoly(self.num_vars, self.degree, {e: c * other for e, c in self._terms.items()}, self.labels)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int) -> HomPoly:
        out = HomPoly(self.num_vars, 0, {(0,) * self.num_vars: 1}, self.labels)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, x):
        return evaluate(self, x)

    def scaled(self, c: Sequence[float]) -> HomPoly:
        """``x -> p(c_1 x_1, ..., c_m x_m)``."""
        if len(c) != self.num_vars:
            raise ArgumentError("scale vector length mismatch")
        terms = {}
        for e, a in self._terms.items():
            f = a
            for ci, k in zip(c, e):
                if k:
                    f = f * ci**k
            terms[e] = f
        return HomPoly(self.num_vars, self.degree, terms, self.labels)

    def permuted(self, order: Sequence[int]) -> HomPoly:
        """New polynomial whose variable ``i`` is old variable ``order[i]``."""
        if sorted(order) != list(range(self.num_vars)):
            raise ArgumentError(f"{order} is not a permutation of 0..{self.num_vars - 1}")
        terms = {tuple(e[j] for j in order): c for e, c in self._terms.items()}
        return HomPoly(self.num_vars, self.degree, terms, [self.labels[j] for j in order])

    def to_float(self) -> HomPoly:
        return HomPoly(self.num_vars, self.degree, {e: float(c) for e, c in self._terms.items()}, self.labels)

    def to_exact(self) -> HomPoly:
        return HomPoly(self.num_vars, self.degree, {e: Fraction(c) for e, c in self._terms.items()}, self.labels)

    # -- serialization ------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "degree": self.degree,
            "monomials": [{"exps": list(e), "coeff": float(c)} for e, c in self._terms.items()],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> HomPoly:
        try:
            m = int(obj["num_vars"])
            n = int(obj["degree"])
            raw = obj["monomials"]
            terms = [(tuple(mono["exps"]), mono["coeff"]) for mono in raw]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed polynomial JSON: {exc}") from exc
        parsed = []
        for e, c in terms:
            if isinstance(c, str):
                c = Fraction(c)
            elif isinstance(c, bool) or not isinstance(c, (int, float)):
                raise ValidationError(f"coefficient {c!r} is not a number")
            parsed.append((e, c))
        return cls(m, n, parsed)


def _add(a: Mapping[Exponent, Coeff], b: Mapping[Exponent, Coeff], sign: int = 1) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out.get(e, 0) + sign * c
    return out


def _mul(a: Mapping[Exponent, Coeff], b: Mapping[Exponent, Coeff]) -> dict:
    out: dict[Exponent, Coeff] = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(i + j for i, j in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
    return out


def load_poly(path) -> HomPoly:
    with open(path) as fh:
        return HomPoly.from_json_obj(json.load(fh))


def dump_poly(p: HomPoly) -> str:
    return json.dumps(p.to_json_obj())


# -- evaluation ---------------------------------------------------------


def _check_dim(p: HomPoly, x) -> None:
    if len(x) != p.num_vars:
        raise ArgumentError(f"point has {len(x)} coordinates, polynomial has {p.num_vars} variables")


def evaluate(p: HomPoly, x: Sequence) -> Coeff:
    """Value of ``p`` at a real point.

    Exact when both the coefficients and ``x`` are rational.
    """
    _check_dim(p, x)
    if p.is_zero:
        return 0
    if p.is_exact and all(_is_exact(v) for v in x):
        total = 0
        for e, c in p.terms.items():
            term = c
            for v, k in zip(x, e):
                if k:
                    term *= v**k
            total += term
        return total
    xv = np.asarray(x, dtype=float)
    return float(np.prod(xv ** p.exponent_matrix(), axis=1) @ p.coefficient_vector())


def evaluate_complex(p: HomPoly, z: Sequence[complex]) -> complex:
    _check_dim(p, z)
    if p.is_zero:
        return 0j
    zv = np.asarray(z, dtype=complex)
    return complex(np.prod(zv ** p.exponent_matrix(), axis=1) @ p.coefficient_vector())


def gradient(p: HomPoly, x: Sequence[float]) -> np.ndarray:
    """All first partials at ``x`` in one pass (float)."""
    _check_dim(p, x)
    return np.array([float(evaluate(partial_derivative(p, i), x)) for i in range(p.num_vars)])


# -- calculus and structure --------------------------------------------


def _check_var(p: HomPoly, var: int) -> None:
    if not 0 <= var < p.num_vars:
        raise ArgumentError(f"variable index {var} out of range 0..{p.num_vars - 1}")


def partial_derivative(p: HomPoly, var: int) -> HomPoly:
    _check_var(p, var)
    if p.degree == 0:
        raise ArgumentError("cannot differentiate a degree-0 polynomial within Hom_+")
    terms = {}
    for e, c in p.terms.items():
        k = e[var]
        if k:
            d = list(e)
            d[var] = k - 1
            terms[tuple(d)] = c * k
    return HomPoly(p.num_vars, p.degree - 1, terms, p.labels)


def restrict_zero(p: HomPoly, var: int) -> HomPoly:
    """Set ``x_var = 0`` and drop that variable (remaining ones reindexed densely)."""
    _check_var(p, var)
    if p.num_vars == 1:
        raise ArgumentError("cannot eliminate the only variable")
    terms = {e[:var] + e[var + 1 :]: c for e, c in p.terms.items() if e[var] == 0}
    labels = p.labels[:var] + p.labels[var + 1 :]
    return HomPoly(p.num_vars - 1, p.degree, terms, labels)


def mixed_partial_at_zero(p: HomPoly) -> Coeff:
    """``d^n p / dx_1 ... dx_n`` at the origin, i.e. the coefficient of ``x_1 x_2 ... x_n``."""
    if not p.is_square:
        raise ArgumentError(f"need num_vars == degree, got m={p.num_vars}, n={p.degree}")
    return p.coefficient((1,) * p.num_vars)


def max_degree(p: HomPoly, var: int) -> int:
    _check_var(p, var)
    return max((e[var] for e in p.terms), default=0)


def rank_of_subset(p: HomPoly, subset: Iterable[int]) -> int:
    """Largest joint degree ``sum_{j in S} r_j`` over the support; 0 for the zero polynomial."""
    idx = sorted(set(subset))
    for j in idx:
        _check_var(p, j)
    if p.is_zero or not idx:
        return 0
    return int(p.exponent_matrix()[:, idx].sum(axis=1).max())


def support_contains(p: HomPoly, exponents: Sequence[int]) -> bool:
    if len(exponents) != p.num_vars:
        raise ArgumentError("exponent vector length mismatch")
    if sum(exponents) != p.degree:
        raise ArgumentError(f"exponent vector sums to {sum(exponents)}, polynomial degree is {p.degree}")
    return tuple(exponents) in p.terms


def compositions(total: int, parts: int) -> Iterator[Exponent]:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def check_support_characterization(p: HomPoly) -> dict:
    """Compare the support with the rank-function description of it.

    For H-stable ``p`` the support is exactly the set of exponent vectors
    ``r`` with ``sum_{j in S} r_j <= Rank_p(S)`` for every subset ``S``.
    Returns the subset ranks and any exponent vectors where the two
    descriptions disagree.
    """
    m = p.num_vars
    if m > SUPPORT_CHECK_MAX_VARS:
        raise CapacityGuardError(f"support scan limited to m <= {SUPPORT_CHECK_MAX_VARS}")
    if p.is_zero:
        return {"consistent": True, "mismatches": [], "ranks": {}}
    masks = np.array([[(s >> j) & 1 for j in range(m)] for s in range(1 << m)], dtype=np.int64)
    E = p.exponent_matrix()
    ranks = (E @ masks.T).max(axis=0)
    R = np.array(list(compositions(p.degree, m)), dtype=np.int64)
    predicted = np.all(R @ masks.T <= ranks, axis=1)
    mismatches = []
    for r, pred in zip(R, predicted):
        actual = tuple(int(v) for v in r) in p.terms
        if actual != bool(pred):
            mismatches.append({"exponents": [int(v) for v in r], "in_support": actual, "predicted": bool(pred)})
    return {
        "consistent": not mismatches,
        "mismatches": mismatches,
        "ranks": {s: int(ranks[s]) for s in range(1 << m)},
    }


def is_doubly_stochastic(p: HomPoly, tol: float = 1e-9) -> bool:
    """All partials at the all-ones point equal 1, and so does the coefficient sum."""
    if not p.is_square:
        return False
    if p.is_zero:
        return False
    total = sum(p.terms.values())
    if abs(total - 1) > tol:
        return False
    for j in range(p.num_vars):
        d = sum(c * e[j] for e, c in p.terms.items())
        if abs(d - 1) > tol:
            return False
    return True
