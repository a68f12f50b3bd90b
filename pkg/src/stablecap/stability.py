"""Real-rootedness, Hurwitz tests, and numeric H-stability verdicts.

A homogeneous ``p`` with nonnegative coefficients is H-stable exactly when
every line restriction ``t -> p(t X - Y)`` with ``X, Y > 0`` has only real
(positive) roots.  :func:`h_stable_test` samples such lines.  A non-real
root ``a + bi`` yields the point ``Z = X - (i/b)(a X - Y)`` with
``Re Z = X > 0`` and ``p(Z) = 0``; H-stable polynomials satisfy
``|p(Z)| >= |p(Re Z)|``, so a computed ``Z`` with ``|p(Z)|`` well below
``|p(Re Z)|`` is a refutation anyone can re-check by two evaluations.
Spurious complex pairs produced by the eigenvalue solver near multiple real
roots fail that check and are not reported as refutations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import polynomial as P
from scipy.special import logsumexp

from .constants import G
from .errors import ArgumentError, NumericError, PreconditionError
from .poly import HomPoly, evaluate_complex

ROOT_TOL = 1e-7
CLUSTER_RESIDUAL_RTOL = 1e-8
WITNESS_RATIO = 0.5
DEFAULT_TRIALS = 200
PROBABLY_STABLE = "probably_stable"
REFUTED = "refuted"


@dataclass(frozen=True)
class UnivariatePoly:
    """Coefficients in ascending degree order, trailing zeros trimmed."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients))
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_roots(cls, roots: Sequence[complex], leading: float = 1.0) -> UnivariatePoly:
        c = P.polyfromroots(roots) * leading
        if np.all(np.isreal(c)):
            c = np.real(c)
        return cls(c)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        return P.polyval(t, self.coefficients)

    def derivative(self) -> UnivariatePoly:
        return UnivariatePoly(P.polyder(self.coefficients))

    def roots(self) -> np.ndarray:
        return P.polyroots(self.coefficients)


def _as_univariate(q) -> UnivariatePoly:
    return q if isinstance(q, UnivariatePoly) else UnivariatePoly(np.asarray(q))


# -- line restrictions --------------------------------------------------------


def restrict_to_line(p: HomPoly, X: Sequence[float], Y: Sequence[float], method: str = "expand") -> UnivariatePoly:
    """Coefficients of ``t -> p(t X + Y)``.

    ``method="expand"`` multiplies out ``prod_i (X_i t + Y_i)^(r_i)`` per
    monomial.  ``method="chebyshev"`` treats ``p`` as a black box: it samples
    ``deg + 1`` Chebyshev nodes, interpolates, and checks the fit at fresh
    points.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (p.num_vars,) or Y.shape != (p.num_vars,):
        raise ArgumentError("direction and offset must have one entry per variable")
    if np.any(X <= 0):
        raise ArgumentError("direction X must be strictly positive")
    n = p.degree
    if method == "expand":
        powers = []
        for xi, yi in zip(X, Y):
            pw = [np.array([1.0])]
            for _ in range(max(1, n)):
                pw.append(P.polymul(pw[-1], [yi, xi]))
            powers.append(pw)
        out = np.zeros(n + 1)
        for e, c in p.terms.items():
            term = np.array([float(c)])
            for i, k in enumerate(e):
                if k:
                    term = P.polymul(term, powers[i][k])
            out[: len(term)] += term
        return UnivariatePoly(out)
    if method == "chebyshev":
        scale = 1.0 + float(np.max(np.abs(Y) / X))
        nodes = scale * np.cos(np.pi * (np.arange(n + 1) + 0.5) / (n + 1))
        vals = np.array([evaluate_complex(p, t * X + Y).real for t in nodes])
        fit = Chebyshev.fit(nodes, vals, n, domain=[-scale, scale]).convert(kind=Polynomial)
        coeffs = np.zeros(n + 1)
        coeffs[: len(fit.coef)] = fit.coef
        check = scale * np.linspace(-1, 1, 2 * n + 3)
        direct = np.array([evaluate_complex(p, t * X + Y).real for t in check])
        mag = np.array([evaluate_complex(p, np.abs(t * X + Y)).real for t in check])
        resid = np.abs(P.polyval(check, coeffs) - direct).max()
        if resid > 1e-6 * (1 + mag.max()):
            raise NumericError(f"Chebyshev interpolation residual {resid:.3e} too large")
        return UnivariatePoly(coeffs)
    raise ArgumentError(f"unknown method {method!r}")


# -- univariate root tests ------------------------------------------------------


class RootReport(NamedTuple):
    real: bool
    roots: np.ndarray
    unresolved: np.ndarray
    max_imag: float


def _derivative_residual_ok(c: np.ndarray, x: float, order: int, rtol: float) -> bool:
    d = c
    for j in range(order):
        scale = P.polyval(abs(x), np.abs(d))
        if abs(P.polyval(x, d)) > rtol * scale:
            return False
        d = P.polyder(d)
    return True


def real_roots_check(q, tol: float = ROOT_TOL) -> RootReport:
    """Decide whether all roots of ``q`` are real.

    Eigenvalues of the companion matrix with ``|Im z| <= tol (1 + |z|)`` are
    real.  A multiple real root of multiplicity ``m`` comes back as a small
    ring of ``m`` eigenvalues; such rings are grouped, and a group is accepted
    as an ``m``-fold real root at its centroid ``x`` when ``q, q', ...,
    q^(m-1)`` all nearly vanish at ``x`` (relative to the absolute-value sum
    of their terms).  Rings of genuine complex roots fail that test.
    """
    q = _as_univariate(q)
    if q.degree < 1:
        raise ArgumentError("real_roots_check needs degree >= 1")
    c = q.coefficients
    z = q.roots()
    imag = np.abs(z.imag)
    nonreal = imag > tol * (1 + np.abs(z))
    if not nonreal.any():
        return RootReport(True, np.sort(z.real), np.array([], dtype=complex), float(imag.max(initial=0.0)))
    k = len(z)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            radius = 2.5 * max(imag[i], imag[j]) + tol * (1 + abs(z[i]))
            if abs(z[i] - z[j]) <= radius:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    resolved = []
    unresolved = []
    max_imag = 0.0
    for idx in groups.values():
        if not nonreal[idx].any():
            resolved.extend(z[idx].real)
            max_imag = max(max_imag, float(imag[idx].max()))
            continue
        centre = z[idx].mean()
        x = float(centre.real)
        if abs(centre.imag) <= tol * (1 + abs(centre)) and np.isrealobj(c) and _derivative_residual_ok(
            c, x, len(idx), CLUSTER_RESIDUAL_RTOL
        ):
            resolved.extend([x] * len(idx))
            max_imag = max(max_imag, abs(float(centre.imag)))
        else:
            unresolved.extend(z[idx][nonreal[idx]])
            max_imag = max(max_imag, float(imag[idx].max()))
    roots = np.sort(np.array(resolved)) if not unresolved else z
    return RootReport(not unresolved, roots, np.array(unresolved, dtype=complex), max_imag)


def is_hurwitz(q, tol: float = 1e-10) -> bool:
    """All roots strictly in the open left half-plane (``Re z < -tol (1 + |z|)``)."""
    q = _as_univariate(q)
    if q.degree < 1:
        raise ArgumentError("is_hurwitz needs degree >= 1")
    z = q.roots()
    return bool(np.all(z.real < -tol * (1 + np.abs(z))))


# -- multivariate H-stability ----------------------------------------------------


@dataclass(frozen=True)
class StabilityVerdict:
    status: str
    trials: int
    witness: dict | None
    max_imag_residual: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def refuted(self) -> bool:
        return self.status == REFUTED

    def to_json_obj(self) -> dict:
        return {
            "status": self.status,
            "trials": self.trials,
            "witness": self.witness,
            "max_imag_residual": self.max_imag_residual,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def _polish_root(c: np.ndarray, t: complex, steps: int = 30) -> complex:
    dc = P.polyder(c)
    for _ in range(steps):
        d = P.polyval(t, dc)
        if d == 0:
            break
        step = P.polyval(t, c) / d
        t = t - step
        if abs(step) <= 1e-15 * (1 + abs(t)):
            break
    return complex(t)


def witness_point(X, Y, root: complex) -> np.ndarray:
    """``Z = X - (i/b)(a X - Y)`` for a root ``a + bi`` of ``t -> p(t X - Y)``."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    a, b = root.real, root.imag
    return X - (1j / b) * (a * X - Y)


def verify_witness(p: HomPoly, witness: dict, ratio: float = WITNESS_RATIO) -> bool:
    """Re-check a refutation: the root is non-real and ``|p(Z)| < ratio |p(Re Z)|``."""
    X = np.asarray(witness["X"], dtype=float)
    Y = np.asarray(witness["Y"], dtype=float)
    root = complex(*witness["root"])
    if abs(root.imag) <= ROOT_TOL * (1 + abs(root)):
        return False
    Z = witness_point(X, Y, root)
    return abs(evaluate_complex(p, Z)) < ratio * abs(evaluate_complex(p, Z.real))


def h_stable_test(
    p: HomPoly,
    trials: int = DEFAULT_TRIALS,
    tol: float = ROOT_TOL,
    seed: int = 0,
    method: str = "expand",
) -> StabilityVerdict:
    """Sample lines ``t -> p(t X - Y)`` with log-uniform ``X, Y`` in ``[1e-2, 1e2]``."""
    if p.is_zero:
        raise ArgumentError("h_stable_test needs a nonzero polynomial")
    if p.degree == 0:
        return StabilityVerdict(PROBABLY_STABLE, 0, None, 0.0)
    rng = np.random.default_rng(seed)
    m = p.num_vars
    max_imag = 0.0
    min_root = math.inf
    unverified = 0
    for trial in range(trials):
        X = 10.0 ** rng.uniform(-2, 2, m)
        Y = 10.0 ** rng.uniform(-2, 2, m)
        L = restrict_to_line(p, X, -Y, method=method)
        rep = real_roots_check(L, tol)
        max_imag = max(max_imag, rep.max_imag)
        if rep.real:
            min_root = min(min_root, float(rep.roots.min()))
            continue
        for cand in rep.unresolved:
            t0 = _polish_root(L.coefficients, complex(cand))
            if abs(t0.imag) <= tol * (1 + abs(t0)):
                continue
            Z = witness_point(X, Y, t0)
            pz = abs(evaluate_complex(p, Z))
            px = abs(evaluate_complex(p, Z.real))
            if pz < WITNESS_RATIO * px:
                witness = {
                    "X": X.tolist(),
                    "Y": Y.tolist(),
                    "root": [t0.real, t0.imag],
                    "Z_real": Z.real.tolist(),
                    "Z_imag": Z.imag.tolist(),
                    "abs_p_Z": pz,
                    "abs_p_ReZ": px,
                    "trial": trial,
                }
                return StabilityVerdict(REFUTED, trial + 1, witness, max_imag, {"seed": seed})
            unverified += 1
    diag = {"seed": seed, "unverified_candidates": unverified, "min_root": min_root}
    return StabilityVerdict(PROBABLY_STABLE, trials, None, max_imag, diag)


# -- the univariate derivative bound -----------------------------------------------


@dataclass(frozen=True)
class DerivativeBound:
    """``Q'(0)`` against ``G(k) inf_{t>0} Q(t)/t``."""

    lhs: float
    rhs: float
    slack: float
    infimum: float
    degree: int
    argmin: float | None


def _golden_section(f, lo: float, hi: float, iters: int = 90) -> float:
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (a + b) / 2


def min_ratio_over_t(c: Sequence[float]) -> tuple[float, float | None]:
    """``inf_{t > 0} Q(t)/t`` for nonnegative coefficients ``c`` (ascending), with its argmin.

    Works with ``phi(s) = log(Q(e^s)/e^s)``, convex in ``s``: golden-section
    search on ``[-30, 30]`` (widened if the minimum sits at an end), then
    Newton steps using ``phi'`` and ``phi''`` as mean and variance of the
    monomial degrees under softmax weights.
    """
    c = np.asarray(c, dtype=float)
    if c[0] == 0:
        return float(c[1]) if len(c) > 1 else 0.0, None
    idx = np.nonzero(c)[0]
    logc = np.log(c[idx])
    powers = idx.astype(float) - 1.0

    def phi(s):
        return float(logsumexp(logc + powers * s))

    lo, hi = -30.0, 30.0
    for _ in range(10):
        s = _golden_section(phi, lo, hi)
        if s - lo < 1e-3 * (hi - lo):
            lo -= 30.0
        elif hi - s < 1e-3 * (hi - lo):
            hi += 30.0
        else:
            break
    for _ in range(50):
        w = np.exp(logc + powers * s - phi(s))
        mean = float(w @ powers)
        var = float(w @ (powers - mean) ** 2)
        if var <= 0:
            break
        step = mean / var
        s -= step
        if abs(step) < 1e-15 * (1 + abs(s)):
            break
    return math.exp(phi(s)), math.exp(s)


def derivative_lower_bound_check(q) -> DerivativeBound:
    q = _as_univariate(q)
    c = q.coefficients
    if np.iscomplexobj(c):
        raise PreconditionError("polynomial must have real coefficients")
    k = q.degree
    if k < 2:
        raise PreconditionError(f"degree must be >= 2, got {k}")
    if np.any(c < 0):
        raise PreconditionError("coefficients must be nonnegative")
    if not real_roots_check(q).real:
        raise PreconditionError("polynomial has non-real roots")
    inf, argmin = min_ratio_over_t(c)
    lhs = float(c[1])
    rhs = float(G(k)) * inf
    return DerivativeBound(lhs, rhs, lhs - rhs, inf, k, argmin)
