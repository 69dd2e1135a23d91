import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from app.config.lab_config import (
    CONDEXP_TOL,
    DEFAULT_ALPHA_RATIO,
    DEFAULT_SCAN_CAP,
    INEQUALITY_RTOL,
    ORDER_TOL,
    PROJECTION_TOL,
)
from app.model.algebra import Operator, Projection, TracialAlgebra
from app.model.ergodic import ErgodicAverage, MarkovOperator
from app.model.errors import (
    AlphaOrderError,
    CorankViolationError,
    ExponentError,
    IndexOutOfRangeError,
    MalformedAlgebraError,
)
from app.model.exponent import ExponentLike
from app.model.filtration import Filtration
from app.model.martingale import MartingaleSequence
from app.model.reports import (
    MarkovReport,
    SubsequenceLevel,
    SubsequenceReport,
    TruncationReport,
    UnitaryApproxReport,
    UnitaryApproxRow,
)
from app.service.algebra import (
    absolute_value,
    identity,
    operator_le,
    projection_meet_all,
    spectral_projection,
    trace,
)
from app.service.condexp import factor_expectation
from app.service.rearrangement import mu_eval
from app.service.schatten import as_exponent, lp_norm, lp_norm_power, operator_norm
from app.util.linalg import ginibre, hermitian_part, make_rng

logger = logging.getLogger(__name__)

PHASE_CONVENTION = "phi_k = K^-(N-k+1)"


def _le(lhs: float, rhs: float) -> bool:
    return bool(lhs <= rhs * (1 + INEQUALITY_RTOL) + 1e-12)


def markov_from_map(alg: TracialAlgebra, fn: Callable[[Operator], Operator], **parameters) -> MarkovOperator:
    """Matrix of a linear map on M_d, one column per matrix unit (row-major order)."""
    d = alg.dim
    columns = np.empty((d * d, d * d), dtype=np.complex128)
    for index in range(d * d):
        unit = np.zeros(d * d)
        unit[index] = 1.0
        columns[:, index] = fn(Operator(unit.reshape(d, d), alg)).entries.reshape(-1)
    return MarkovOperator(columns, alg, parameters)


def identity_markov(alg: TracialAlgebra) -> MarkovOperator:
    return MarkovOperator(np.eye(alg.dim**2), alg, {"kind": "identity"})


def conjugation_markov(U: Operator) -> MarkovOperator:
    """x ↦ U x U*."""
    return MarkovOperator(np.kron(U.entries, U.entries.conj()), U.algebra, {"kind": "conjugation"})


def _check_alphas(alphas: Sequence[float]) -> List[float]:
    alphas = [float(a) for a in alphas]
    if len(alphas) < 2 or alphas[0] != 0.0:
        raise AlphaOrderError(f"alphas must start with 0 and have at least two entries, got {alphas}")
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise AlphaOrderError(f"alphas must be strictly increasing, got {alphas}")
    if alphas[-1] > 1.0:
        raise AlphaOrderError(f"alphas must not exceed 1, got {alphas[-1]}")
    return alphas


def convex_markov(alphas: Sequence[float], filtration: Filtration) -> MarkovOperator:
    """
    T = Σ_n (α_{n+1} − α_n) ℰ_{min(n, top)} + (1 − α_K) ℰ_top.

    On the martingale increment ℰ_j − ℰ_{j−1} the map acts as multiplication
    by 1 − α_j.
    """
    alphas = _check_alphas(alphas)
    top = filtration.top
    level_matrices = {}

    def level(n: int) -> np.ndarray:
        n = min(n, top)
        if n not in level_matrices:
            level_matrices[n] = markov_from_map(filtration.algebra, filtration.level_map(n)).matrix
        return level_matrices[n]

    matrix = sum((b - a) * level(n) for n, (a, b) in enumerate(zip(alphas, alphas[1:])))
    if alphas[-1] < 1.0:
        matrix = matrix + (1.0 - alphas[-1]) * level(top)
    return MarkovOperator(matrix, filtration.algebra, {"alphas": alphas, "filtration": filtration})


def geometric_alphas(top: int) -> List[float]:
    """α_n = 1 − 2^{−n} for n = 0..top."""
    return [1.0 - 2.0**-n for n in range(top + 1)]


def separated_alphas(top: int, ratio: float = DEFAULT_ALPHA_RATIO) -> List[float]:
    """
    α_0 = 0 and α_n = ratio^{−(top−n)}: consecutive scales differ by ``ratio``,
    so Cesàro means of suitable length isolate every level.
    """
    if top < 1 or ratio <= 1:
        raise AlphaOrderError(f"need top ≥ 1 and ratio > 1, got top={top} ratio={ratio}")
    return [0.0] + [ratio ** -(top - n) for n in range(1, top + 1)]


def check_markov_invariants(
    T: MarkovOperator,
    trials: int = 100,
    seed: int = 0,
    tol: float = CONDEXP_TOL,
    strict: bool = True,
) -> MarkovReport:
    """Unitality T(1) = 1, trace preservation and positivity on random x*x."""
    alg = T.algebra
    rng = make_rng(seed)
    one = identity(alg)
    unital_error = float(np.abs((T(one) - one).entries).max())
    trace_error, min_eigenvalue = 0.0, math.inf
    for _ in range(trials):
        x = Operator(ginibre(alg.dim, rng), alg)
        trace_error = max(trace_error, abs(trace(alg, T(x)) - trace(alg, x)) / max(1.0, abs(trace(alg, x))))
        positive = T(x.adjoint() @ x).entries
        scale = max(1.0, float(np.abs(positive).max()))
        min_eigenvalue = min(min_eigenvalue, float(np.linalg.eigvalsh(hermitian_part(positive)).min()) / scale)
    report = MarkovReport(
        passed=unital_error <= tol and trace_error <= tol and min_eigenvalue >= -tol,
        trials=trials,
        unital_error=unital_error,
        trace_error=trace_error,
        min_eigenvalue=min_eigenvalue,
        unital_ok=unital_error <= tol,
        trace_ok=trace_error <= tol,
        positive_ok=min_eigenvalue >= -tol,
    )
    return report.enforce(strict)


def ergodic_average(T: MarkovOperator, x: Operator, n: int) -> Operator:
    """M_n(T)(x) = (1/n) Σ_{k<n} T^k x by iterated application."""
    if n < 1:
        raise IndexOutOfRangeError(f"average length must be positive, got {n}")
    current = x.entries.reshape(-1).astype(np.complex128)
    total = current.copy()
    for _ in range(n - 1):
        current = T.matrix @ current
        total += current
    return Operator((total / n).reshape(x.dim, x.dim), x.algebra)


def cesaro_checkpoints(T: MarkovOperator, x: Operator, max_exponent: int) -> List[ErgodicAverage]:
    """
    M_m(T)(x) for m = 1, 2, 4, …, 2^max_exponent by doubling:
    S_{2m} = S_m + T^m S_m and T^{2m} = (T^m)².
    """
    power = T
    partial = x.entries.reshape(-1).astype(np.complex128)
    averages = [ErgodicAverage(n=1, value=x)]
    m = 1
    for _ in range(max_exponent):
        partial = partial + power.matrix @ partial
        power = power.compose(power)
        m *= 2
        averages.append(ErgodicAverage(n=m, value=Operator((partial / m).reshape(x.dim, x.dim), x.algebra)))
    return averages


def find_subsequence(
    T: MarkovOperator,
    X: Operator,
    p: ExponentLike,
    tol: float,
    filtration: Optional[Filtration] = None,
    scan_cap: int = DEFAULT_SCAN_CAP,
    strict: bool = False,
) -> SubsequenceReport:
    """
    For every level n, the first checkpoint m (a power of two up to
    ``scan_cap``) with ‖M_m(T)X − ℰ_n X‖_p ≤ tol. Levels never reaching tol
    report their best checkpoint instead; the sum of errors is compared with 1.
    """
    if tol <= 0:
        raise ExponentError(f"tolerance must be positive, got {tol}")
    filtration = filtration or T.parameters.get("filtration")
    if filtration is None:
        raise MalformedAlgebraError("find_subsequence needs the filtration T was built from")
    alg = X.algebra
    checkpoints = cesaro_checkpoints(T, X, int(math.floor(math.log2(scan_cap))))
    levels = []
    for n in filtration.levels:
        target = filtration.level_map(n)(X)
        errors = [lp_norm(alg, average.value - target, p) for average in checkpoints]
        hit = next((i for i, error in enumerate(errors) if error <= tol), None)
        at = hit if hit is not None else int(np.argmin(errors))
        levels.append(SubsequenceLevel(level=n, m=checkpoints[at].n, error=errors[at], reached=hit is not None))
        if hit is None:
            logger.info("level %d not reached within %d: best error %.3g at m=%d", n, scan_cap, errors[at], checkpoints[at].n)
    total = sum(level.error for level in levels)
    report = SubsequenceReport(
        passed=total <= 1.0,
        p=as_exponent(p).p,
        tol=tol,
        scan_cap=scan_cap,
        levels=levels,
        total_error=total,
        total_ok=total <= 1.0,
    )
    return report.enforce(strict)


def truncate_and_meet(
    Z_list: Sequence[Operator],
    t: float,
    p: ExponentLike,
    strict: bool = True,
) -> Tuple[Projection, TruncationReport]:
    """
    Markov truncation and meet.

    e_n = 1_{[0, λ]}(|Z_n|) with λ = t^{−1/p} satisfies ‖Z_n e_n‖ ≤ λ and, by
    the Markov inequality, τ(1−e_n) ≤ λ^{−p}‖Z_n‖_p^p = t‖Z_n‖_p^p. The meet
    e = ∧ e_n keeps ‖Z_n e‖ ≤ λ for every n, has τ(1−e) ≤ Σ τ(1−e_n), and
    therefore sup_n ‖Z_n e‖ ≤ λ bounds μ^c at corank τ(1−e).

    Args:
        Z_list: operators of one algebra
        t: truncation parameter in (0, 1)
        p: exponent, p ≥ 1
        strict: raise InequalityViolationError when a bound fails

    Returns:
        (e, TruncationReport)
    """
    exponent = as_exponent(p)
    if not 0 < t < 1:
        raise CorankViolationError(f"t must lie in (0, 1), got {t}")
    if exponent.p < 1:
        raise ExponentError(f"truncation needs p ≥ 1, got {exponent.p}")
    if not Z_list:
        raise MalformedAlgebraError("nothing to truncate")
    alg = Z_list[0].algebra
    one = identity(alg)
    threshold = t ** (-1 / exponent.p)

    projections, complements, bounds, norms = [], [], [], []
    for Z in Z_list:
        e_n = spectral_projection(absolute_value(Z), 0.0, threshold)
        projections.append(e_n)
        complements.append(trace(alg, one - e_n.operator).real)
        bounds.append(t * lp_norm_power(alg, Z, exponent) if not exponent.is_infinite else 0.0)
        norms.append(operator_norm(Z @ e_n.operator))
    e = projection_meet_all(projections)
    meet_complement = trace(alg, one - e.operator).real
    norms_after = [operator_norm(Z @ e.operator) for Z in Z_list]
    mu_value = mu_eval(MartingaleSequence.of(Z_list), e)

    markov_ok = all(_le(c, b) for c, b in zip(complements, bounds))
    norm_ok = all(_le(n, threshold) for n in norms + norms_after)
    subadditive_ok = _le(meet_complement, sum(complements)) or meet_complement <= PROJECTION_TOL
    mu_ok = _le(mu_value, threshold)
    meet_ok = all(operator_le(e, e_n, tol=ORDER_TOL) for e_n in projections)
    report = TruncationReport(
        passed=markov_ok and norm_ok and subadditive_ok and mu_ok and meet_ok,
        t=t,
        p=exponent.p,
        threshold=threshold,
        complements=complements,
        markov_bounds=bounds,
        norms_after=norms_after,
        meet_complement=meet_complement,
        mu_value=mu_value,
        markov_ok=markov_ok,
        norm_ok=norm_ok,
        subadditive_ok=subadditive_ok,
        mu_ok=mu_ok,
        meet_ok=meet_ok,
    )
    return e, report.enforce(strict)


def unitary_phases(N: int, K: int) -> np.ndarray:
    """φ_k = K^{−(N−k+1)} for k = 1..N."""
    if K < 2 or N < 1:
        raise IndexOutOfRangeError(f"need N ≥ 1 and K ≥ 2, got N={N} K={K}")
    return np.array([float(K) ** -(N - k + 1) for k in range(1, N + 1)])


def diagonal_unitary(N: int, K: int) -> Operator:
    """U_N = Σ_k exp(2πi φ_k) e_{k,k}."""
    return Operator(np.diag(np.exp(2j * np.pi * unitary_phases(N, K))), TracialAlgebra.normalized(N))


def dirichlet_factor(delta, L: int):
    """
    (1/L) Σ_{j<L} e^{2πijΔ} = e^{iπ(L−1)Δ} sin(πLΔ) / (L sin(πΔ)), with Δ
    reduced mod 1 and the value 1 at integer Δ.
    """
    if L < 1:
        raise IndexOutOfRangeError(f"average length must be positive, got {L}")
    delta = np.asarray(delta, dtype=float)
    reduced = delta - np.round(delta)
    denominator = L * np.sin(np.pi * reduced)
    small = np.abs(np.sin(np.pi * reduced)) < 1e-15
    safe = np.where(small, 1.0, denominator)
    factor = np.exp(1j * np.pi * (L - 1) * reduced) * np.sin(np.pi * L * reduced) / safe
    return np.where(small, 1.0 + 0j, factor)


def dirichlet_average(phases: np.ndarray, x: Operator, L: int) -> Operator:
    """(1/L) Σ_{j<L} U^j x U^{−j} for U = diag(exp(2πi φ)), entry by entry."""
    return Operator(x.entries * dirichlet_factor(phases[:, None] - phases[None, :], L), x.algebra)


def conj_average(U: Operator, x: Operator, L: int) -> Operator:
    """
    (1/L) Σ_{j<L} U^j x U^{−j}. Diagonal unitaries use the closed-form Dirichlet
    factor; any other unitary is averaged by iterated conjugation.
    """
    if np.abs(U.entries.conj().T @ U.entries - np.eye(U.dim)).max(initial=0.0) > PROJECTION_TOL:
        raise MalformedAlgebraError("conj_average needs a unitary")
    diagonal = np.diag(U.entries)
    if np.abs(U.entries - np.diag(diagonal)).max(initial=0.0) > PROJECTION_TOL:
        return ergodic_average(conjugation_markov(U), x, L)
    return dirichlet_average(np.angle(diagonal) / (2 * np.pi), x, L)


def unitary_approx_check(
    N: int,
    K_list: Sequence[int],
    p: ExponentLike,
    trials: int = 100,
    seed: int = 0,
    strict: bool = False,
) -> UnitaryApproxReport:
    """
    Σ_{n=0}^{N} ‖𝔼_{max(N−n,1)}(x) − M_{K^n}(x)‖_p ≤ ‖x‖_p for averages of the
    conjugation by the diagonal unitary, over the same random x for every K.

    Reports the smallest K of ``K_list`` for which every trial satisfies the
    inequality and, for that K, ‖U_N − 1‖ next to 2^{−N}.
    """
    exponent = as_exponent(p)
    alg = TracialAlgebra.normalized(N)
    rng = make_rng(seed)
    samples = [Operator(ginibre(N, rng), alg) for _ in range(trials)]
    targets = [[factor_expectation(N, max(N - n, 1))(x) for n in range(N + 1)] for x in samples]
    norms = [lp_norm(alg, x, exponent) for x in samples]

    rows = []
    for K in sorted(K_list):
        phases = unitary_phases(N, K)
        worst_ratio, worst = -math.inf, (0.0, 0.0)
        holds = True
        for x, target, norm in zip(samples, targets, norms):
            lhs = sum(
                lp_norm(alg, target[n] - dirichlet_average(phases, x, K**n), exponent) for n in range(N + 1)
            )
            holds = holds and _le(lhs, norm)
            ratio = lhs / norm if norm > 0 else (0.0 if lhs == 0 else math.inf)
            if ratio > worst_ratio:
                worst_ratio, worst = ratio, (lhs, norm)
        rows.append(UnitaryApproxRow(K=K, worst_lhs=worst[0], worst_rhs=worst[1], holds=holds))
    minimal = next((row.K for row in rows if row.holds), None)
    gap_K = minimal if minimal is not None else (rows[-1].K if rows else None)
    gap = operator_norm(diagonal_unitary(N, gap_K) - identity(alg)) if gap_K is not None else None
    logger.info("unitary approximation N=%d: minimal K %s, ‖U−1‖=%s", N, minimal, gap)
    report = UnitaryApproxReport(
        passed=minimal is not None,
        N=N,
        p=exponent.p,
        trials=trials,
        rows=rows,
        minimal_K=minimal,
        unitary_gap=gap,
        gap_target=2.0**-N,
        phase_convention=PHASE_CONVENTION,
    )
    return report.enforce(strict)
