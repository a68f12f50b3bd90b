"""Capacity of H-stable polynomials, permanents, mixed discriminants and their lower bounds."""

from .capacity import CapacityResult, capacity, scale_to_doubly_stochastic
from .cascade import BoundCertificate, CascadeStep, best_order_bound, build_cascade, certify_bound, verify_step_inequality
from .constants import G, constants, vdw
from .errors import (
    ArgumentError,
    CapacityGuardError,
    ConvergenceError,
    NotAttainedError,
    NumericError,
    PreconditionError,
    StableCapError,
    ValidationError,
)
from .matrices import PsdTuple, det_polynomial, enumerate_lambda, mixed_discriminant, permanent, prod_polynomial
from .poly import HomPoly, mixed_partial_at_zero
from .stability import StabilityVerdict, UnivariatePoly, h_stable_test, is_hurwitz, real_roots_check, restrict_to_line

__all__ = [name for name in dir() if not name.startswith("_")]
