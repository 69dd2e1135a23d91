import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.config.lab_config import (
    CONDEXP_TOL,
    DIM_CAP,
    ENTRYWISE_TOL,
    INEQUALITY_RTOL,
    PROJECTION_TOL,
)
from app.model.algebra import Operator, Projection, TracialAlgebra
from app.model.errors import (
    ContractionViolationError,
    CorankViolationError,
    DimensionCapError,
    DimensionMismatchError,
    ExponentError,
    InequalityViolationError,
    MalformedAlgebraError,
)
from app.model.exponent import ExponentLike
from app.model.filtration import FactorFiltrationLevel, TruncatedBigAlgebra
from app.model.martingale import MartingaleSequence
from app.model.reports import (
    CertifiedBound,
    ChainConstants,
    ChainReport,
    FlipIdentityReport,
    TnBoundsReport,
    VkRecursionReport,
)
from app.service.algebra import tensor_algebra
from app.service.condexp import big_cond_exp, factor_cond_exp, factor_filtration
from app.service.schatten import as_exponent, lp_norm, lp_norm_power, operator_norm
from app.util.linalg import make_rng

logger = logging.getLogger(__name__)


def _le(lhs: float, rhs: float) -> bool:
    return bool(lhs <= rhs * (1 + INEQUALITY_RTOL) + 1e-15)


def build_xi(N: int) -> Operator:
    """ξ_N = Σ_k e_{k,1}: ones in the first column."""
    entries = np.zeros((N, N))
    entries[:, 0] = 1.0
    return Operator(entries, TracialAlgebra.normalized(N))


def build_XN(N: int) -> Operator:
    """X_N = ξ_N ξ_N*, the all-ones matrix (‖X_N‖_1 = 1 under τ_N)."""
    xi = build_xi(N)
    return xi @ xi.adjoint()


def build_XpN(p: ExponentLike, N: int) -> Operator:
    """X_{p,N} = N^{1/p−1} X_N, normalized so that ‖X_{p,N}‖_p = 1."""
    exponent = as_exponent(p)
    return build_XN(N) * N ** (exponent.reciprocal - 1.0)


def Y_block(N: int, n: int) -> np.ndarray:
    """Y_n = Σ_{k,l≤n} e_{k,l} as an N×N array."""
    block = np.zeros((N, N))
    block[:n, :n] = 1.0
    return block


def D_block(N: int, n: int) -> np.ndarray:
    """D_n = Σ_{k>n} e_{k,k}."""
    return np.diag((np.arange(N) >= n).astype(float))


def martingale_of_XN(N: int) -> MartingaleSequence:
    """
    (𝔼_n X_N)_{1≤n≤N} from the closed form Y_n + D_n, cross-checked against the
    block formula of the factor conditional expectation.
    """
    if N < 1:
        raise MalformedAlgebraError(f"N must be positive, got {N}")
    alg = TracialAlgebra.normalized(N)
    X = build_XN(N)
    terms = []
    for n in range(1, N + 1):
        term = Operator(Y_block(N, n) + D_block(N, n), alg)
        if not term.allclose(factor_cond_exp(FactorFiltrationLevel(N, n), X), atol=CONDEXP_TOL):
            raise InequalityViolationError(f"closed form of 𝔼_{n}(X_{N}) disagrees with the block formula")
        terms.append(term)
    return MartingaleSequence(
        ambient=alg,
        terms=tuple(terms),
        filtration=factor_filtration(N),
        term_levels=tuple(range(1, N + 1)),
    )


def build_Tn(n: int) -> Operator:
    """T_n = Σ_{i≤j} e_{i,j} in (M_n, tr_n)."""
    return Operator(np.triu(np.ones((n, n))), TracialAlgebra.unnormalized(n))


def tn_bounds_check(n: int, p: ExponentLike, strict: bool = True) -> TnBoundsReport:
    """
    Sandwich (n/2)^{1/p} ≤ ‖T_n‖_p ≤ (2n/(1−2^{p−1}))^{1/p} under the usual trace,
    together with T_n − S T_n = 1 for the shift S = Σ_{k<n} e_{k,k+1}, ‖S‖_∞ = 1.
    """
    exponent = as_exponent(p)
    if not 0 < exponent.p < 1:
        raise ExponentError(f"the T_n bounds need 0 < p < 1, got {exponent.p}")
    q = exponent.p
    T = build_Tn(n)
    computed = lp_norm(T.algebra, T, exponent)
    lower = (n / 2) ** (1 / q)
    upper = (2 * n / (1 - 2 ** (q - 1))) ** (1 / q)

    S = Operator(np.eye(n, k=1), T.algebra)
    shift_norm = operator_norm(S)
    identity_error = float(np.abs((T - S @ T).entries - np.eye(n)).max())
    shift_ok = identity_error <= ENTRYWISE_TOL and (
        abs(shift_norm - 1.0) <= ENTRYWISE_TOL if n >= 2 else shift_norm == 0.0
    )
    lower_ok, upper_ok = _le(lower, computed), _le(computed, upper)
    report = TnBoundsReport(
        passed=lower_ok and upper_ok and shift_ok,
        n=n,
        p=q,
        lower=lower,
        computed=computed,
        upper=upper,
        lower_ok=lower_ok,
        upper_ok=upper_ok,
        shift_norm=shift_norm,
        shift_identity_ok=shift_ok,
    )
    return report.enforce(strict)


def vk_recursion_check(kmax: int, p: ExponentLike, dim_cap: int = DIM_CAP, strict: bool = True) -> VkRecursionReport:
    """
    v_k = 2^{−k}‖T_{2^k}‖_p^p: v_0 = 1, v_{k+1} ≤ v_k + 2^{k(p−1)−1} and
    v_k ≤ 1/(1−2^{p−1}) for k = 0..kmax.
    """
    exponent = as_exponent(p)
    if not 0 < exponent.p < 1:
        raise ExponentError(f"the v_k recursion needs 0 < p < 1, got {exponent.p}")
    if 2**kmax > dim_cap:
        raise DimensionCapError(f"T_{2 ** kmax} exceeds the dimension cap {dim_cap}")
    q = exponent.p
    values = []
    for k in range(kmax + 1):
        T = build_Tn(2**k)
        values.append(lp_norm_power(T.algebra, T, exponent) / 2**k)
    cap = 1 / (1 - 2 ** (q - 1))
    v0_ok = abs(values[0] - 1.0) <= ENTRYWISE_TOL
    recursion_ok = all(_le(values[k + 1], values[k] + 2 ** (k * (q - 1) - 1)) for k in range(kmax))
    cap_ok = all(_le(v, cap) for v in values)
    report = VkRecursionReport(
        passed=v0_ok and recursion_ok and cap_ok,
        p=q,
        kmax=kmax,
        values=values,
        cap=cap,
        v0_ok=v0_ok,
        recursion_ok=recursion_ok,
        cap_ok=cap_ok,
    )
    return report.enforce(strict)


def chain_constants(p: ExponentLike) -> ChainConstants:
    """
    c_p = 2^{−(1+2/p)}, C_p = (2/(1−2^{2p−1}))^{1/(2p)},
    t′ = (c_p^p / (2 C_p^p))², δ = (c_p^p / 2)^{1/p} / 2.
    """
    exponent = as_exponent(p)
    if not exponent.is_chain_admissible:
        raise ExponentError(f"the chain constants need 0 < p < 1/2, got {exponent.p}")
    q = exponent.p
    c_p = 2.0 ** (-(1 + 2 / q))
    C_p = (2 / (1 - 2 ** (2 * q - 1))) ** (1 / (2 * q))
    t_prime = (c_p**q / (2 * C_p**q)) ** 2
    delta = (c_p**q / 2) ** (1 / q) / 2
    return ChainConstants(p=q, c_p=c_p, C_p=C_p, t_prime=t_prime, delta=delta)


def certified_lower_bound(p: ExponentLike, t: float) -> CertifiedBound:
    constants = chain_constants(p)
    return CertifiedBound(t=t, t_prime=constants.t_prime, delta=constants.delta, applies=t <= constants.t_prime)


def chain_algebra(N: int, dim_cap: int = DIM_CAP) -> TracialAlgebra:
    """(M_N, τ_N) ⊗ (M_N, tr_N)."""
    return tensor_algebra(TracialAlgebra.normalized(N), TracialAlgebra.unnormalized(N), dim_cap)


def _eta(N: int, n: int) -> np.ndarray:
    eta = np.zeros((N, N))
    eta[:n, 0] = 1.0
    return eta


def _row_unit(N: int, n: int) -> np.ndarray:
    unit = np.zeros((N, N))
    unit[0, n - 1] = 1.0
    return unit


def _e11(N: int) -> np.ndarray:
    return _row_unit(N, 1)


def build_A(N: int, dim_cap: int = DIM_CAP) -> Operator:
    """A_N = Σ_n n η_n ⊗ e_{1,n} with η_n = Σ_{k≤n} e_{k,1}."""
    alg = chain_algebra(N, dim_cap)
    entries = sum(n * np.kron(_eta(N, n), _row_unit(N, n)) for n in range(1, N + 1))
    return Operator(entries, alg)


def _check_projection(N: int, e: Projection):
    if e.dim != N:
        raise DimensionMismatchError(f"projection of dimension {e.dim} given for N = {N}")


def half_sup(N: int, e: Projection) -> float:
    """m = sup_n ‖Y_n e‖ / 2."""
    _check_projection(N, e)
    return max(np.linalg.norm(Y_block(N, n) @ e.matrix, ord=2) for n in range(1, N + 1)) / 2


def contractions(N: int, e: Projection, m: float) -> List[np.ndarray]:
    """U_n = e Y_n / (2m) (zero when m = 0)."""
    _check_projection(N, e)
    if m == 0:
        return [np.zeros((N, N), dtype=np.complex128) for _ in range(N)]
    return [e.matrix @ Y_block(N, n) / (2 * m) for n in range(1, N + 1)]


def build_B(N: int, e: Projection, m: float, dim_cap: int = DIM_CAP) -> Operator:
    """B_N = 2m (e ⊗ e_{1,1}) (Σ_n U_n η_n ⊗ e_{1,n})."""
    alg = chain_algebra(N, dim_cap)
    U = contractions(N, e, m)
    worst = max(np.linalg.norm(u, ord=2) for u in U)
    if worst > 1 + PROJECTION_TOL:
        raise ContractionViolationError(f"‖U_n‖ = {worst:.6g} > 1: m = {m} is too small for e")
    inner = sum(np.kron(U[n - 1] @ _eta(N, n), _row_unit(N, n)) for n in range(1, N + 1))
    return Operator(2 * m * np.kron(e.matrix, _e11(N)) @ inner, alg)


def build_C(N: int, e: Projection, dim_cap: int = DIM_CAP) -> Operator:
    """C_N = ((1−e) ⊗ e_{1,1}) A_N."""
    _check_projection(N, e)
    A = build_A(N, dim_cap)
    return Operator(np.kron(np.eye(N) - e.matrix, _e11(N)), A.algebra) @ A


def chain_verify(
    N: int,
    p: ExponentLike,
    t: float,
    e: Projection,
    dim_cap: int = DIM_CAP,
    strict: bool = True,
) -> ChainReport:
    """
    Verifies the inequality chain for one projection e of M_N.

    With m = sup_n ‖Y_n e‖/2 and norms of L_p((M_N, τ_N) ⊗ (M_N, tr_N)):
    (i) ‖A‖_p ≥ c_p N, (ii) ‖B‖_p ≤ 2m√N, (iii) ‖C‖_p ≤ C_p t^{1/(2p)} N,
    the p-triangle inequality ‖A‖^p ≤ ‖B‖^p + ‖C‖^p and, when t ≤ t′, the
    implied bound m ≥ δ√N. Also reports the residual of A = B + C and the
    intermediate bound ‖A‖_p ≤ N (2/(1−2^{p−1}))^{1/p}.

    Args:
        N: factor size
        p: exponent, 0 < p < 1/2
        t: corank budget, τ_N(1−e) ≤ t
        e: projection of M_N
        dim_cap: cap on N²
        strict: raise InequalityViolationError on a failed assertion

    Returns:
        ChainReport
    """
    constants = chain_constants(p)
    q = constants.p
    _check_projection(N, e)
    if e.normalized_corank > t + PROJECTION_TOL:
        raise CorankViolationError(f"τ(1−e) = {e.normalized_corank} exceeds t = {t}")

    m = half_sup(N, e)
    A = build_A(N, dim_cap)
    B = build_B(N, e, m, dim_cap)
    C = build_C(N, e, dim_cap)
    alg = A.algebra
    norm_A, norm_B, norm_C = (lp_norm(alg, X, q) for X in (A, B, C))
    residual = float(np.abs((A - B - C).entries).max())
    max_contraction = max((np.linalg.norm(u, ord=2) for u in contractions(N, e, m)), default=0.0)

    lower_A = constants.c_p * N
    upper_B = 2 * m * math.sqrt(N)
    upper_C = constants.C_p * t ** (1 / (2 * q)) * N
    intermediate = N * (2 / (1 - 2 ** (q - 1))) ** (1 / q)
    certificate = certified_lower_bound(q, t)
    certified_m = certificate.lower_bound(N)

    a_ok = _le(lower_A, norm_A)
    b_ok = _le(norm_B, upper_B)
    c_ok = _le(norm_C, upper_C)
    triangle_ok = _le(norm_A**q, norm_B**q + norm_C**q)
    certificate_ok = certified_m is None or _le(certified_m, m)
    decomposition_ok = residual <= ENTRYWISE_TOL
    intermediate_ok = _le(norm_A, intermediate)
    report = ChainReport(
        passed=all((a_ok, b_ok, c_ok, triangle_ok, certificate_ok, decomposition_ok, intermediate_ok)),
        N=N,
        p=q,
        t=t,
        corank=e.normalized_corank,
        m=m,
        norm_A=norm_A,
        norm_B=norm_B,
        norm_C=norm_C,
        lower_A=lower_A,
        upper_B=upper_B,
        upper_C=upper_C,
        intermediate_upper_A=intermediate,
        decomposition_residual=residual,
        max_contraction=max_contraction,
        certificate_applies=certificate.applies,
        certified_m_lower=certified_m,
        a_lower_ok=a_ok,
        b_upper_ok=b_ok,
        c_upper_ok=c_ok,
        p_triangle_ok=triangle_ok,
        certificate_ok=certificate_ok,
        decomposition_ok=decomposition_ok,
        intermediate_ok=intermediate_ok,
    )
    if not report.passed:
        logger.info("chain violated at N=%d p=%g t=%g: %s", N, q, t, report.failures())
    return report.enforce(strict)


def build_truncated_Xp(alg: TruncatedBigAlgebra, p: ExponentLike, terms: Iterable[int]) -> Operator:
    """
    Partial sum Σ_{N ∈ terms} ε_{N!} N^{−2} X_{p,N!} in the truncation, each
    summand acting on the factor M_{N!} and on the sign coordinate N!.
    """
    exponent = as_exponent(p)
    total = np.zeros((alg.dim, alg.dim), dtype=np.complex128)
    for N in sorted(set(terms)):
        size = math.factorial(N)
        X = alg.embed(alg.factor_slot(size), build_XpN(exponent, size).entries)
        total += (alg.sign_operator(size) @ X).entries / N**2
    return Operator(total, alg.algebra)


def sign_flip(alg: TruncatedBigAlgebra, k: int, X: Operator) -> Operator:
    """π_k: flips the k-th sign coordinate (ε_k ↦ −ε_k), a trace-preserving involution."""
    slot = alg.sign_slot(k)
    if X.dim != alg.dim:
        raise DimensionMismatchError(f"operator of dimension {X.dim} given to a truncation of dimension {alg.dim}")
    slots = len(alg.slot_dims)
    return alg.from_tensor(np.flip(alg.as_tensor(X), axis=(slot, slot + slots)))


def retained_terms(alg: TruncatedBigAlgebra) -> Tuple[int, ...]:
    """Every N whose factor M_{N!} and sign coordinate N! are both in the truncation."""
    terms = []
    N = 1
    while math.factorial(N) <= alg.max_factor:
        size = math.factorial(N)
        if size in alg.factors and size <= alg.sign_count:
            terms.append(N)
        N += 1
    return tuple(terms)


def flip_identity_check(
    alg: TruncatedBigAlgebra,
    p: ExponentLike,
    N: int,
    terms: Optional[Sequence[int]] = None,
    seed: int = 0,
    tol: float = 1e-10,
    strict: bool = True,
) -> FlipIdentityReport:
    """
    (2/N²) X_{p,N!} = ε_{N!}(𝒳_p − π_{N!}(𝒳_p)) on the truncated partial sum, and
    π_{N!} ∘ ℰ_n = ℰ_n ∘ π_{N!} for every level n (on 𝒳_p and a random element).
    """
    exponent = as_exponent(p)
    terms = tuple(terms) if terms is not None else retained_terms(alg)
    if N not in terms:
        terms = terms + (N,)
    size = math.factorial(N)
    X = build_truncated_Xp(alg, exponent, terms)
    lhs = alg.embed(alg.factor_slot(size), build_XpN(exponent, size).entries) * (2 / N**2)
    rhs = alg.sign_operator(size) @ (X - sign_flip(alg, size, X))
    identity_error = float(np.abs((lhs - rhs).entries).max())

    def commutator_gap(n: int, x: Operator) -> float:
        flipped_after = sign_flip(alg, size, big_cond_exp(alg, n, x))
        flipped_before = big_cond_exp(alg, n, sign_flip(alg, size, x))
        return float(np.abs((flipped_after - flipped_before).entries).max())

    samples = (X, alg.random_element(make_rng(seed)))
    levels = list(range(alg.max_factor + 2))
    errors = [max(commutator_gap(n, x) for x in samples) for n in levels]
    identity_ok = identity_error <= tol
    commute_ok = max(errors) <= tol
    report = FlipIdentityReport(
        passed=identity_ok and commute_ok,
        N=N,
        p=exponent.p,
        identity_error=identity_error,
        commute_levels=levels,
        commute_errors=errors,
        identity_ok=identity_ok,
        commute_ok=commute_ok,
    )
    return report.enforce(strict)
