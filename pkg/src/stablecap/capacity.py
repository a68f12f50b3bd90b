"""Capacity ``Cap(p) = inf_{x > 0} p(x) / (x_1 ... x_n)`` of ``p`` in ``Hom_+(n, n)``.

In logarithmic coordinates ``x = exp(y)`` the objective

    f(y) = log p(exp(y)) - sum(y)

is a log-sum-exp of affine functions, hence convex, and invariant under
``y -> y + c*1`` because ``p`` is homogeneous of degree ``n``.  It is
minimized over ``sum(y) = 0`` by damped Newton with Armijo backtracking.
The gradient is ``E^T w - 1`` and the Hessian ``Cov_w(E)``, where ``E`` holds
the exponent vectors and ``w`` the softmax weights of the monomials.

Whether the infimum is zero, positive but unattained, or attained is read
off exactly from the position of ``(1, ..., 1)`` in the Newton polytope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import ArgumentError, CapacityGuardError, ConvergenceError, NotAttainedError, NumericError
from .newton_polytope import BOUNDARY, INTERIOR, OUTSIDE, HullVerdict, hull_position, minimal_face
from .poly import HomPoly, evaluate, is_doubly_stochastic

DEFAULT_TOL = 1e-10
MAX_ITER = 500
DIVERGENCE_RADIUS = 50.0
LP_MAX_SUPPORT = 5000
EXACTNESS_MAX_N = 6


@dataclass(frozen=True)
class CapacityResult:
    value: float
    minimizer: tuple[float, ...] | None
    attained: bool
    iterations: int
    gradient_norm: float
    certificate: str
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def log_value(self) -> float:
        return math.log(self.value) if self.value > 0 else -math.inf

    def to_json_obj(self) -> dict:
        return {
            "value": self.value,
            "minimizer": list(self.minimizer) if self.minimizer is not None else None,
            "attained": self.attained,
            "iterations": self.iterations,
            "gradient_norm": self.gradient_norm,
            "certificate": self.certificate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def _require_square(p: HomPoly) -> None:
    if not p.is_square:
        raise ArgumentError(f"capacity needs p in Hom_+(n, n); got m={p.num_vars}, n={p.degree}")
    if p.is_zero:
        raise ArgumentError("capacity of the zero polynomial is not defined here")


def positivity_certificate(p: HomPoly, max_support: int = LP_MAX_SUPPORT) -> HullVerdict:
    """Position of ``(1, ..., 1)`` in the Newton polytope of ``p``.

    ``outside`` means ``Cap(p) = 0``; ``interior`` (relative interior) means
    the infimum is positive and attained; ``boundary`` means positive but not
    attained.  A cheap combinatorial test is tried first: if every
    ``1 + e_i - e_j`` is in the support, their uniform average is ``1`` and
    they span the hyperplane, so ``1`` is interior.  Otherwise an exact LP
    decides.
    """
    _require_square(p)
    n = p.num_vars
    if n == 1:
        return HullVerdict(INTERIOR, (1,), 1, method="trivial")
    ones = (1,) * n
    pairs = []
    for i in range(n):
        for j in range(n):
            if i != j:
                e = [1] * n
                e[i] += 1
                e[j] -= 1
                pairs.append(tuple(e))
    if all(e in p.terms for e in pairs):
        return HullVerdict(INTERIOR, None, 0, method="pair-exchange", notes={"points": len(pairs)})
    if len(p) > max_support:
        raise CapacityGuardError(f"exact Newton-polytope LP limited to {max_support} support points, got {len(p)}")
    return hull_position(list(p.terms), ones)


def _hyperplane_basis(n: int) -> np.ndarray:
    Q, _ = np.linalg.qr((np.eye(n) - 1.0 / n)[:, : n - 1])
    return Q


class LogObjective:
    """``f(y) = log p(exp(y)) - sum(y)`` with its gradient and Hessian."""

    def __init__(self, p: HomPoly):
        if p.is_zero:
            raise ArgumentError("objective undefined for the zero polynomial")
        self.p = p
        self.E = p.exponent_matrix().astype(float)
        self.logc = np.log(p.coefficient_vector())

    def _weights(self, y):
        s = self.logc + self.E @ y
        lse = logsumexp(s)
        return lse, np.exp(s - lse)

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(logsumexp(self.logc + self.E @ y) - y.sum())

    def gradient(self, y) -> np.ndarray:
        _, w = self._weights(np.asarray(y, dtype=float))
        return w @ self.E - 1.0

    def hessian(self, y) -> np.ndarray:
        _, w = self._weights(np.asarray(y, dtype=float))
        mu = w @ self.E
        return (self.E * w[:, None]).T @ self.E - np.outer(mu, mu)


def _minimize(p: HomPoly, tol: float, max_iter: int, watchdog: bool) -> tuple:
    """Damped Newton on ``f`` over ``sum(y) = 0``; returns ``(f, z, B, iterations, gnorm, diverged, stalled)``."""
    n = p.num_vars
    B = _hyperplane_basis(n)
    E = p.exponent_matrix().astype(float)
    M = (E - 1.0) @ B
    logc = np.log(p.coefficient_vector())

    def f_and_w(z):
        s = logc + M @ z
        lse = logsumexp(s)
        return float(lse), np.exp(s - lse)

    z = np.zeros(n - 1)
    f, w = f_and_w(z)
    diverged = stalled = False
    it = 0
    while True:
        g = M.T @ w
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol * (1 + abs(f)):
            break
        if watchdog and np.linalg.norm(z) > DIVERGENCE_RADIUS:
            diverged = True
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"capacity solver did not converge in {max_iter} iterations",
                last_iterate=np.exp(B @ z),
                diagnostics={"gradient_norm": gnorm, "value": math.exp(f)},
            )
        H = (M * w[:, None]).T @ M - np.outer(g, g)
        lam, V = np.linalg.eigh(H)
        floor = max(lam.max(), 1.0) * 1e-12
        d = -V @ ((V.T @ g) / np.maximum(lam, floor))
        slope = float(g @ d)
        # below this the decrease in f is invisible in floating point; judge steps by the gradient
        flat = -slope <= 1e-12 * (1 + abs(f))
        t = 1.0
        for _ in range(60):
            f_new, w_new = f_and_w(z + t * d)
            if flat:
                if np.linalg.norm(M.T @ w_new) < gnorm:
                    break
            elif f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            # no representable decrease left
            if gnorm <= 1e-6 * (1 + abs(f)):
                stalled = True
                break
            raise ConvergenceError(
                "line search failed away from a stationary point",
                last_iterate=np.exp(B @ z),
                diagnostics={"gradient_norm": gnorm, "value": math.exp(f)},
            )
        z = z + t * d
        f, w = f_new, w_new
        it += 1
    return f, z, B, it, gnorm, diverged, stalled


def capacity(
    p: HomPoly,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    max_support: int = LP_MAX_SUPPORT,
) -> CapacityResult:
    """Capacity of ``p`` with an exact attained/unattained/zero classification.

    When ``(1, ..., 1)`` sits on the boundary of the Newton polytope the
    infimum is approached only at infinity, where Newton converges slowly.
    Instead the monomials on the smallest face containing ``1`` are kept:
    dropping the others cannot raise the value, and pushing the point along
    the face normal makes them vanish, so both infima agree.  On that face
    ``1`` is relatively interior and the reduced problem has a minimizer.
    """
    _require_square(p)
    n = p.num_vars
    if n == 1:
        c = float(p.coefficient((1,)))
        return CapacityResult(c, (1.0,), True, 0, 0.0, INTERIOR)
    cert = positivity_certificate(p, max_support)
    if cert.status == OUTSIDE:
        return CapacityResult(0.0, None, False, 0, 0.0, OUTSIDE, {"method": cert.method})

    diag = {"method": cert.method}
    target = p
    if cert.status == BOUNDARY:
        keys = list(p.terms)
        face = minimal_face(keys, (1,) * n)
        target = HomPoly(n, n, {keys[j]: p.terms[keys[j]] for j in face}, p.labels)
        diag["face_size"] = len(face)
    f, z, B, it, gnorm, diverged, stalled = _minimize(target, tol, max_iter, cert.status == INTERIOR)
    value = math.exp(f)
    attained = cert.status == INTERIOR and not diverged
    minimizer = tuple(float(v) for v in np.exp(B @ z)) if attained else None
    diag.update(diverged=diverged, stalled=stalled)
    return CapacityResult(value, minimizer, attained, it, gnorm, cert.status, diag)


def capacity_bruteforce(p: HomPoly, samples: int = 20000, seed: int = 0) -> float:
    """Random-search upper bound on ``Cap(p)``; a crude independent check."""
    _require_square(p)
    rng = np.random.default_rng(seed)
    obj = LogObjective(p)
    Y = rng.normal(scale=2.0, size=(samples, p.num_vars))
    Y -= Y.mean(axis=1, keepdims=True)
    return float(np.exp(min(obj.value(y) for y in Y)))


@dataclass(frozen=True)
class ScaledPolynomial:
    """``q(x) = p(t_1 x_1, ..., t_n x_n) / p(t)`` for the capacity minimizer ``t``."""

    base: HomPoly
    scale_vector: tuple[float, ...]
    normalization: float

    @property
    def polynomial(self) -> HomPoly:
        return self.base.to_float().scaled(self.scale_vector) * (1.0 / self.normalization)

    def to_json_obj(self) -> dict:
        return {
            "scale_vector": list(self.scale_vector),
            "normalization": self.normalization,
            "polynomial": self.polynomial.to_json_obj(),
        }


def scale_to_doubly_stochastic(p: HomPoly, tol: float = 1e-7) -> ScaledPolynomial:
    res = capacity(p)
    if not res.attained:
        raise NotAttainedError(f"capacity infimum not attained ({res.certificate}); no doubly-stochastic scaling")
    t = res.minimizer
    norm = float(evaluate(p.to_float(), t))
    out = ScaledPolynomial(p, t, norm)
    if not is_doubly_stochastic(out.polynomial, tol):
        raise NumericError("scaled polynomial fails the doubly-stochastic check")
    return out


def capacity_exactness_check(p: HomPoly) -> dict:
    """Check the pairwise second-order mixed partials that certify a unique minimizer.

    For every ordered pair ``i != j`` the coefficient of
    ``x_j^2 prod_{m != i, j} x_m`` must be positive.
    """
    _require_square(p)
    n = p.num_vars
    if n > EXACTNESS_MAX_N:
        raise CapacityGuardError(f"exactness check limited to n <= {EXACTNESS_MAX_N}")
    pairs = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            e = [1] * n
            e[j] += 1
            e[i] -= 1
            c = p.coefficient(e)
            pairs.append({"i": i, "j": j, "exponents": e, "coefficient": float(c), "positive": c > 0})
    return {"unique": all(q["positive"] for q in pairs), "pairs": pairs}
