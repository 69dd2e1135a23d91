import math
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError
from scipy import linalg

from app.config.lab_config import INEQUALITY_RTOL, ZERO_CUTOFF
from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import DimensionMismatchError, ExponentError, InequalityViolationError
from app.model.exponent import ExponentLike, PExponent


def as_exponent(p: ExponentLike) -> PExponent:
    try:
        return PExponent.of(p)
    except ValidationError as e:
        raise ExponentError(f"invalid exponent {p!r}: exponent must be positive") from e


def singular_values(A: Operator) -> np.ndarray:
    """
    Singular values in descending order; values below ZERO_CUTOFF times the
    largest one are reported as exactly 0.
    """
    sigma = linalg.svdvals(A.entries)
    if sigma.size and sigma[0] > 0:
        sigma[sigma < ZERO_CUTOFF * sigma[0]] = 0.0
    return sigma


def operator_norm(A: Operator) -> float:
    sigma = singular_values(A)
    return float(sigma[0]) if sigma.size else 0.0


def lp_norm_power(alg: TracialAlgebra, A: Operator, p: ExponentLike) -> float:
    """Σ_k w σ_k^p with w the trace weight of ``alg`` (finite p only)."""
    exponent = as_exponent(p)
    if exponent.is_infinite:
        raise ExponentError("the p-th power is only defined for finite p")
    if A.dim != alg.dim:
        raise DimensionMismatchError(f"operator of dimension {A.dim} is not in M_{alg.dim}")
    sigma = singular_values(A)
    nonzero = sigma[sigma > 0]
    return float(alg.weight * np.sum(nonzero**exponent.p))


def lp_norm(alg: TracialAlgebra, A: Operator, p: ExponentLike) -> float:
    """
    Noncommutative L_p (quasi-)norm (Σ_k w σ_k^p)^{1/p}; p = ∞ gives the
    operator norm. Zero singular values contribute nothing, also for p < 1.
    """
    exponent = as_exponent(p)
    if A.dim != alg.dim:
        raise DimensionMismatchError(f"operator of dimension {A.dim} is not in M_{alg.dim}")
    if exponent.is_infinite:
        return operator_norm(A)
    sigma = singular_values(A)
    if not sigma.size or sigma[0] == 0:
        return 0.0
    # σ_max factored out so that large finite p stays in range
    ratios = sigma[sigma > 0] / sigma[0]
    return float(sigma[0] * (alg.weight * np.sum(ratios**exponent.p)) ** (1.0 / exponent.p))


def holder_split_bound(
    A: Operator,
    B: Operator,
    p: ExponentLike,
    r: ExponentLike,
    q: ExponentLike,
    alg: Optional[TracialAlgebra] = None,
) -> Tuple[float, float]:
    """
    Hölder inequality ‖AB‖_p ≤ ‖A‖_r ‖B‖_q for an explicit split 1/p = 1/r + 1/q.

    Args:
        A, B: operators of the same algebra
        p, r, q: exponents, checked to satisfy 1/p = 1/r + 1/q
        alg: trace used for the norms (defaults to the algebra of A)

    Returns:
        (lhs, rhs) = (‖AB‖_p, ‖A‖_r · ‖B‖_q)
    """
    p, r, q = as_exponent(p), as_exponent(r), as_exponent(q)
    if not math.isclose(p.reciprocal, r.reciprocal + q.reciprocal, rel_tol=1e-12, abs_tol=1e-12):
        raise ExponentError(f"1/{p.p} ≠ 1/{r.p} + 1/{q.p}")
    alg = alg or A.algebra
    lhs = lp_norm(alg, A @ B, p)
    rhs = lp_norm(alg, A, r) * lp_norm(alg, B, q)
    if lhs > rhs * (1 + INEQUALITY_RTOL) + 1e-15:
        raise InequalityViolationError(f"Hölder violated: {lhs} > {rhs}", (lhs, rhs))
    return lhs, rhs
