"""The derivative cascade ``q_n = p, ..., q_1`` and permanent-type lower bounds.

``q_{i-1}`` is ``d/dx_i q_i`` with ``x_i = 0`` afterwards, i.e. the monomials
of ``q_i`` that are linear in ``x_i``, with ``x_i`` removed.  For H-stable
``p`` each step loses at most a factor ``G(deg_{q_i}(i))`` of capacity, so

    q_1 = d^n p / dx_1 ... dx_n (0)  >=  Cap(p) * prod_{i>=2} G(min(i, deg_p(i))).

Variables are 0-based in code: level ``i`` eliminates variable ``i - 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .capacity import CapacityResult, capacity
from .constants import G, constants, vdw
from .errors import ArgumentError, CapacityGuardError
from .matrices import check_nonneg, is_lambda_matrix, prod_polynomial
from .newton_polytope import INTERIOR, OUTSIDE
from .poly import HomPoly, max_degree, mixed_partial_at_zero, partial_derivative, restrict_zero

__all__ = [
    "BOUND_NAMES",
    "BoundCertificate",
    "CascadeStep",
    "StepReport",
    "best_order_bound",
    "build_cascade",
    "certify_bound",
    "constants",
    "q2_closed_form",
    "verify_step_inequality",
]

CASCADE_MAX_N = 9
STEP_RTOL = 1e-7
CERT_RTOL = 1e-9
BOUND_NAMES = ("vdw", "schrijver_general", "schrijver_sparse", "improved_lambda")
MATRIX_BOUNDS = ("schrijver_sparse", "improved_lambda")


def _zero_capacity() -> CapacityResult:
    return CapacityResult(0.0, None, False, 0, 0.0, OUTSIDE, {"degenerate": True})


@dataclass(frozen=True)
class CascadeStep:
    level: int
    polynomial: HomPoly
    capacity: CapacityResult
    top_degree: int
    step_factor: Fraction | float

    @property
    def degenerate(self) -> bool:
        return self.polynomial.is_zero


def _capacity_or_zero(q: HomPoly, tol: float) -> CapacityResult:
    if q.is_zero:
        return _zero_capacity()
    if q.num_vars == 1:
        c = float(q.coefficient((1,)))
        return CapacityResult(c, (1.0,), True, 0, 0.0, INTERIOR)
    return capacity(q, tol=tol)


def build_cascade(p: HomPoly, tol: float = 1e-10) -> list[CascadeStep]:
    """Return ``[q_n, q_{n-1}, ..., q_1]`` with capacities and step factors."""
    if not p.is_square:
        raise ArgumentError(f"cascade needs p in Hom_+(n, n); got m={p.num_vars}, n={p.degree}")
    n = p.num_vars
    if n > CASCADE_MAX_N:
        raise CapacityGuardError(f"cascade limited to n <= {CASCADE_MAX_N}")
    steps = []
    q = p
    for i in range(n, 0, -1):
        top = max_degree(q, i - 1) if not q.is_zero else 0
        steps.append(CascadeStep(i, q, _capacity_or_zero(q, tol), top, G(top)))
        if i > 1:
            q = restrict_zero(partial_derivative(q, i - 1), i - 1) if not q.is_zero else HomPoly.zero(i - 1, i - 1)
    return steps


@dataclass(frozen=True)
class StepReport:
    """``Cap(q_{i-1})`` against ``G(deg_{q_i}(i)) Cap(q_i)`` and against the weaker ``G(i) Cap(q_i)``."""

    level: int
    cap_prev: float
    cap: float
    factor: float
    slack: float
    slack_uniform: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return self.slack >= -self.tolerance


def verify_step_inequality(steps: Sequence[CascadeStep], level: int) -> StepReport:
    by_level = {s.level: s for s in steps}
    if level < 2 or level not in by_level or level - 1 not in by_level:
        raise ArgumentError(f"no cascade step for level {level}")
    cur, prev = by_level[level], by_level[level - 1]
    cap, cap_prev = cur.capacity.value, prev.capacity.value
    factor = float(cur.step_factor)
    return StepReport(
        level,
        cap_prev,
        cap,
        factor,
        cap_prev - factor * cap,
        cap_prev - float(G(level)) * cap,
        STEP_RTOL * (1 + cap),
    )


def q2_closed_form(p: HomPoly) -> float:
    """``Cap(q_2)`` from the coefficients of ``p``.

    ``q_2 = a x1 x2 + b x1^2 + c x2^2`` with ``a, b, c`` the coefficients of
    ``x1 x2 x3..xn``, ``x1^2 x3..xn`` and ``x2^2 x3..xn`` in ``p``; its
    capacity is ``a + 2 sqrt(b c)``.
    """
    if not p.is_square or p.num_vars < 2:
        raise ArgumentError("q2_closed_form needs p in Hom_+(n, n) with n >= 2")
    rest = (1,) * (p.num_vars - 2)
    a = float(p.coefficient((1, 1) + rest))
    b = float(p.coefficient((2, 0) + rest))
    c = float(p.coefficient((0, 2) + rest))
    return a + 2 * math.sqrt(b * c)


# -- certificates ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundCertificate:
    bound_name: str
    target: float
    lower_bound: float
    capacity: float
    factors: tuple[tuple[int, float], ...]
    slack: float
    order: tuple[int, ...]
    flags: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict, compare=False)

    def holds(self, tol: float | None = None) -> bool:
        if tol is None:
            tol = CERT_RTOL * (1 + abs(self.target))
        return self.slack >= -tol

    def to_json_obj(self) -> dict:
        return {
            "bound_name": self.bound_name,
            "target": self.target,
            "lower_bound": self.lower_bound,
            "capacity": self.capacity,
            "factors": [[i, g] for i, g in self.factors],
            "slack": self.slack,
            "order": list(self.order),
            "flags": list(self.flags),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


def _split_input(p_or_matrix) -> tuple[HomPoly, list | None]:
    if isinstance(p_or_matrix, HomPoly):
        return p_or_matrix, None
    rows, exact = check_nonneg(p_or_matrix)
    return prod_polynomial(rows, exact=exact), rows


def _check_order(order, n: int) -> tuple[int, ...]:
    if order is None:
        return tuple(range(n))
    order = tuple(int(v) for v in order)
    if sorted(order) != list(range(n)):
        raise ArgumentError(f"order must be a permutation of 0..{n - 1}")
    return order


def _sparse_valid(degrees: Sequence[int], k: int) -> bool:
    # degrees[j] is deg_p of (1-based) variable j + 1
    return all(d <= k for d in degrees[k:])


def _sparse_factors(n: int, k: int) -> list[tuple[int, Fraction | float]]:
    return [(i, G(i)) for i in range(2, min(k, n) + 1)] + [(i, G(k)) for i in range(k + 1, n + 1)]


def _factors(bound_name: str, degrees: Sequence[int], k: int | None) -> tuple[list, int | None]:
    n = len(degrees)
    if bound_name == "vdw":
        return [(i, G(i)) for i in range(2, n + 1)], None
    if bound_name == "schrijver_general":
        return [(i, G(min(i, degrees[i - 1]))) for i in range(2, n + 1)], None
    if bound_name == "schrijver_sparse":
        if k is None:
            valid = [kk for kk in range(1, n + 1) if _sparse_valid(degrees, kk)]
            k = max(valid, key=lambda kk: math.prod(float(g) for _, g in _sparse_factors(n, kk)))
        elif not 1 <= k <= n or not _sparse_valid(degrees, k):
            raise ArgumentError(f"schrijver_sparse with k={k} needs C_j <= k for every column j > k")
        return _sparse_factors(n, k), k
    raise ArgumentError(f"unknown bound {bound_name!r}; choose from {', '.join(BOUND_NAMES)}")


def certify_bound(
    p_or_matrix,
    bound_name: str,
    order: Sequence[int] | None = None,
    k: int | None = None,
    cap: CapacityResult | None = None,
) -> BoundCertificate:
    """Compare the multilinear coefficient of ``p`` with a capacity lower bound.

    ``p_or_matrix`` is a :class:`HomPoly` or a nonnegative square matrix ``A``
    (then ``p = Prod_A``).  ``schrijver_sparse`` and ``improved_lambda`` are
    statements about matrices and reject a bare polynomial.  ``order``
    relabels variables before the cascade (new variable ``i`` is old variable
    ``order[i]``); the target and capacity do not depend on it, the factors do.
    A precomputed capacity may be passed in as ``cap``.
    """
    if bound_name not in BOUND_NAMES:
        raise ArgumentError(f"unknown bound {bound_name!r}; choose from {', '.join(BOUND_NAMES)}")
    p, rows = _split_input(p_or_matrix)
    if bound_name in MATRIX_BOUNDS and rows is None:
        raise ArgumentError(f"bound {bound_name!r} applies to Prod_A and needs a matrix input")
    if not p.is_square:
        raise ArgumentError(f"bounds need p in Hom_+(n, n); got m={p.num_vars}, n={p.degree}")
    n = p.num_vars
    order = _check_order(order, n)
    q = p.permuted(order)
    degrees = [max_degree(q, j) for j in range(n)]
    target = float(mixed_partial_at_zero(p))
    flags = []
    diagnostics: dict = {"degrees": degrees}

    if bound_name == "improved_lambda":
        if k is None:
            k = int(round(float(sum(rows[0]))))
        if not is_lambda_matrix(rows, k):
            raise ArgumentError(f"improved_lambda needs a matrix in Lambda({k}, {n})")
        if k > n:
            raise ArgumentError(f"improved_lambda needs k <= n, got k={k}, n={n}")
        factors = _sparse_factors(n, k)
        # A/k is doubly stochastic, so Cap(Prod_A) = k^n exactly
        cap_value = float(k**n)
        if cap is not None:
            diagnostics["solver_capacity"] = cap.value
        diagnostics["k"] = k
    else:
        factors, k_used = _factors(bound_name, degrees, k)
        if k_used is not None:
            diagnostics["k"] = k_used
        if cap is None:
            cap = capacity(p) if not p.is_zero else _zero_capacity()
        cap_value = cap.value
        diagnostics["certificate"] = cap.certificate
        if cap.certificate == OUTSIDE:
            flags.append("zero_capacity")

    product = math.prod(float(g) for _, g in factors) if factors else 1.0
    lower = product * cap_value
    if target == 0:
        flags.append("zero_target")
    return BoundCertificate(
        bound_name,
        target,
        lower,
        cap_value,
        tuple((i, float(g)) for i, g in factors),
        target - lower,
        order,
        tuple(flags),
        diagnostics,
    )


def best_order_bound(
    p_or_matrix,
    bound_name: str,
    samples: int = 20,
    seed: int = 0,
    k: int | None = None,
) -> BoundCertificate:
    """Largest lower bound over the identity, descending-degree and random orders.

    Capacity is computed once and shared, since relabelling variables does not
    change it.
    """
    p, rows = _split_input(p_or_matrix)
    n = p.num_vars
    arg = rows if rows is not None else p
    cap = None
    if bound_name != "improved_lambda":
        cap = capacity(p) if not p.is_zero else _zero_capacity()
    degrees = [max_degree(p, j) for j in range(n)]
    orders = [tuple(range(n)), tuple(sorted(range(n), key=lambda j: -degrees[j]))]
    rng = np.random.default_rng(seed)
    orders += [tuple(int(v) for v in rng.permutation(n)) for _ in range(samples)]
    best = None
    for order in dict.fromkeys(orders):
        try:
            cert = certify_bound(arg, bound_name, order=order, k=k, cap=cap)
        except ArgumentError:
            # sparse bound with a fixed k may not apply in every order
            continue
        if best is None or cert.lower_bound > best.lower_bound:
            best = cert
    if best is None:
        raise ArgumentError(f"bound {bound_name!r} does not apply in any sampled order")
    return best


def vdw_two_variable_check(p: HomPoly) -> float:
    """Slack of ``Cap(q_2) >= 2 vdw(n) Cap(p)`` using the closed form for ``Cap(q_2)``."""
    return q2_closed_form(p) - 2 * float(vdw(p.num_vars)) * capacity(p).value
