import logging
import math
from dataclasses import dataclass
from itertools import combinations, islice
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from app.config.lab_config import (
    ASYMPTOTIC_MIN_CORANK,
    DEFAULT_BUDGET,
    DEFAULT_CHAIN_P,
    DEFAULT_DESCENTS,
    DEFAULT_OBSTRUCTION_N_MAX,
    DIAG_ENUMERATION_LIMIT,
    INEQUALITY_RTOL,
    LINE_SEARCH_EVALS,
    PER_TERM_STARTS,
)
from app.model.algebra import Projection
from app.model.errors import (
    CertificateError,
    CorankViolationError,
    DimensionMismatchError,
    EnumerationLimitError,
    ExponentError,
)
from app.model.exponent import ExponentLike
from app.model.martingale import MartingaleSequence
from app.model.reports import (
    GrowthReport,
    GrowthRow,
    MuDirection,
    MuEstimate,
    MuMethod,
    ObstructionReport,
)
from app.service.algebra import clean_projection
from app.service.counterexample import certified_lower_bound, chain_constants, martingale_of_XN
from app.service.schatten import as_exponent
from app.util.linalg import complete_frame, make_rng, random_unitary, spawn_seeds
from app.util.pool import run_ordered

logger = logging.getLogger(__name__)

CORANK_EPS = 1e-12
# exact eigenvalues are computed this many terms at a time during pruned evaluation
EVAL_CHUNK = 8
PAIR_TRIES = 3
MAX_STALLS = 3
REFRESH_EVERY = 20


def corank_budget(dim: int, t: float) -> int:
    """Largest corank k with k/dim ≤ t."""
    return int(math.floor(dim * t + CORANK_EPS))


def _check_t(t: float):
    if not 0 < t < 1:
        raise CorankViolationError(f"t must lie in (0, 1), got {t}")


def _le(lhs: float, rhs: float) -> bool:
    return bool(lhs <= rhs * (1 + INEQUALITY_RTOL) + 1e-12)


def mu_eval(seq: MartingaleSequence, e: Projection) -> float:
    """sup_n ‖Y_n e‖: an upper bound for μ_t^c whenever τ(1−e) ≤ t."""
    if e.dim != seq.dim:
        raise DimensionMismatchError(f"projection of dimension {e.dim} for a sequence over M_{seq.dim}")
    return float(max(np.linalg.norm(term.entries @ e.matrix, ord=2) for term in seq.terms))


def _diagonal_witness(seq: MartingaleSequence, dropped: Sequence[int]) -> Projection:
    mask = np.ones(seq.dim)
    mask[list(dropped)] = 0.0
    return Projection.diagonal(mask, seq.ambient)


def mu_diag_exhaustive(seq: MartingaleSequence, t: float, limit: int = DIAG_ENUMERATION_LIMIT) -> MuEstimate:
    """
    Exact minimum of sup_n ‖Y_n e‖ over diagonal projections with τ(1−e) ≤ t.

    Only coranks equal to floor(d·t) are enumerated (dropping more coordinates
    never increases a norm). Subsets are visited in lexicographic order and the
    first optimal one is the witness.
    """
    _check_t(t)
    d = seq.dim
    if d > limit:
        raise EnumerationLimitError(f"dimension {d} is above the enumeration limit {limit}")
    terms = [term.entries for term in seq.terms]
    best, best_dropped, visited = math.inf, (), 0
    for dropped in combinations(range(d), corank_budget(d, t)):
        keep = np.ones(d, dtype=bool)
        keep[list(dropped)] = False
        value = 0.0
        for M in terms:
            value = max(value, float(np.linalg.norm(M[:, keep], ord=2)))
            if value >= best:
                break
        visited += 1
        if value < best:
            best, best_dropped = value, dropped
    return MuEstimate(
        t=t,
        value=best,
        witness=_diagonal_witness(seq, best_dropped),
        direction=MuDirection.UPPER_BOUND,
        method=MuMethod.DIAG_EXHAUSTIVE,
        iterations=visited,
    )


@dataclass
class _Start:
    index: int
    kind: str
    frame: np.ndarray
    value: float


class _Descent:
    """
    Local descent from one start. The frame Q is a full orthonormal basis with
    the range of the projection in its first r columns. Each step moves the
    worst direction of the worst term into a range column (a change of basis
    inside the range) and rotates it against one complement column, with a
    bounded line search on the angle.
    """

    def __init__(self, search: "ProjectionSearch", start: _Start, budget: int, seed: int):
        self.S = search.grams
        self.r = search.rank
        self.k = search.corank
        self.Q = start.frame.astype(search.grams.dtype, copy=True)
        self.value = start.value
        self.budget = budget
        self.used = 0
        self.rng = make_rng(seed)
        self.index = start.index

    def _refresh(self):
        q, r = np.linalg.qr(self.Q)
        diag = np.diag(r)
        self.Q = q * np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
        V = self.Q[:, : self.r]
        self.G = V.conj().T[None] @ (self.S @ V)
        self.G = (self.G + self.G.conj().transpose(0, 2, 1)) / 2
        self.lam = np.linalg.eigvalsh(self.G)[:, -1]
        self.worst = int(np.argmax(self.lam))
        self.value = math.sqrt(max(float(self.lam[self.worst]), 0.0))
        self.used += 1
        self.accepted = 0

    def _align(self, u: np.ndarray) -> int:
        """Householder change of range basis putting span(V u) into one column."""
        i = int(np.argmax(np.abs(u)))
        y = u * (np.conj(u[i]) / abs(u[i]))
        diff = -y
        diff[i] += 1.0
        norm = np.linalg.norm(diff)
        if norm < 1e-14:
            return i
        h = diff / norm
        V = self.Q[:, : self.r]
        self.Q[:, : self.r] = V - 2 * np.outer(V @ h, h.conj())
        Gh = self.G @ h
        hGh = Gh @ h.conj()
        G = (
            self.G
            - 2 * h[None, :, None] * Gh.conj()[:, None, :]
            - 2 * Gh[:, :, None] * h.conj()[None, None, :]
            + 4 * hGh[:, None, None] * np.outer(h, h.conj())[None]
        )
        self.G = (G + G.conj().transpose(0, 2, 1)) / 2
        return i

    def _complement_order(self) -> np.ndarray:
        W = self.Q[:, self.r :]
        diag = np.einsum("dk,ndk->nk", W.conj(), self.S @ W).real
        return np.argsort(diag.max(axis=0), kind="stable")

    def _evaluate(self, col: np.ndarray, Gcol: np.ndarray, i: int):
        """Exact max_n λ_max of the rotated Grams, skipping terms whose bound cannot win."""
        self.used += 1
        delta = col - Gcol
        frob = np.sqrt(np.maximum(2 * np.sum(np.abs(delta) ** 2, axis=1) - np.abs(delta[:, i]) ** 2, 0.0))
        upper = self.lam + frob
        order = np.argsort(-upper, kind="stable")
        best, best_term, exact = -math.inf, -1, {}
        for pos in range(0, len(order), EVAL_CHUNK):
            idx = order[pos : pos + EVAL_CHUNK]
            idx = idx[upper[idx] > best]
            if idx.size == 0:
                break
            G = self.G[idx].copy()
            G[:, :, i] = col[idx]
            G[:, i, :] = col[idx].conj()
            G[:, i, i] = col[idx, i].real
            top = np.linalg.eigvalsh(G)[:, -1]
            exact.update(zip(idx.tolist(), top.tolist()))
            at = int(np.argmax(top))
            if top[at] > best:
                best, best_term = float(top[at]), int(idx[at])
        return best, best_term, exact, frob

    def _rotate(self, i: int, j: int) -> bool:
        V = self.Q[:, : self.r]
        v, w = V[:, i].copy(), self.Q[:, self.r + j].copy()
        Sw = self.S @ w
        y = Sw @ V.conj()
        ww = (Sw @ w.conj()).real
        vw = y[:, i]
        Gcol = self.G[:, :, i].copy()
        Gii = Gcol[:, i].real

        def column(theta: float) -> np.ndarray:
            c, s = math.cos(theta), math.sin(theta)
            col = c * Gcol + s * y
            col[:, i] = c * c * Gii + 2 * c * s * vw.real + s * s * ww
            return col

        cache = {}

        def objective(theta: float) -> float:
            if self.used >= self.budget:
                return math.inf
            cache[theta] = self._evaluate(column(theta), Gcol, i)
            return math.sqrt(max(cache[theta][0], 0.0))

        result = minimize_scalar(
            objective,
            bounds=(-math.pi / 2, math.pi / 2),
            method="bounded",
            options={"maxiter": LINE_SEARCH_EVALS, "xatol": 1e-6},
        )
        theta = float(result.x)
        if theta not in cache or not result.fun < self.value * (1 - 1e-12):
            return False

        best, best_term, exact, frob = cache[theta]
        c, s = math.cos(theta), math.sin(theta)
        self.Q[:, i] = c * v + s * w
        self.Q[:, self.r + j] = -s * v + c * w
        col = column(theta)
        self.G[:, :, i] = col
        self.G[:, i, :] = col.conj()
        self.G[:, i, i] = col[:, i].real
        self.lam = self.lam + frob
        for n, value in exact.items():
            self.lam[n] = value
        self.worst = best_term
        self.value = math.sqrt(max(best, 0.0))
        self.accepted += 1
        return True

    def _worst_direction_step(self) -> bool:
        _, vectors = np.linalg.eigh(self.G[self.worst])
        i = self._align(vectors[:, -1])
        for j in self._complement_order()[:PAIR_TRIES]:
            if self.used >= self.budget:
                return False
            if self._rotate(i, int(j)):
                return True
        return False

    def _random_step(self) -> bool:
        if self.used >= self.budget:
            return False
        return self._rotate(int(self.rng.integers(self.r)), int(self.rng.integers(self.k)))

    def run(self) -> Tuple[float, np.ndarray, int]:
        if self.budget <= 0 or self.k == 0 or self.r == 0:
            return self.value, self.Q, self.used
        self._refresh()
        stalls = 0
        while self.used < self.budget and stalls < MAX_STALLS:
            improved = self._worst_direction_step() or self._random_step()
            stalls = 0 if improved else stalls + 1
            if self.accepted >= REFRESH_EVERY and self.used < self.budget:
                self._refresh()
        logger.debug("descent from start %d: value %.6g after %d evaluations", self.index, self.value, self.used)
        return self.value, self.Q, self.used


class ProjectionSearch:
    """
    Randomized minimization of sup_n ‖Y_n e‖ over projections e of rank
    r = d − floor(d·t).

    The start pool holds budget // 10 frames: the best (or heaviest-column)
    diagonal projection, a greedy deflation, aggregate and per-term spectral
    projections, then random frames. Every start costs one objective
    evaluation; the rest of the budget is shared by the best ``descents``
    starts, which run on a worker pool and are merged by minimum in start
    order, so results depend only on (seed, budget, descents).
    """

    def __init__(
        self,
        seq: MartingaleSequence,
        t: float,
        budget: int = DEFAULT_BUDGET,
        seed: int = 0,
        descents: int = DEFAULT_DESCENTS,
        jobs: Optional[int] = 1,
    ):
        _check_t(t)
        self.seq = seq
        self.t = t
        self.budget = max(1, budget)
        self.seed = seed
        self.descents = max(1, descents)
        self.jobs = jobs
        self.dim = seq.dim
        self.corank = corank_budget(self.dim, t)
        self.rank = self.dim - self.corank
        self.real = seq.is_real()
        terms = np.stack([term.entries for term in seq.terms])
        terms = terms.real if self.real else terms
        self.grams = terms.conj().transpose(0, 2, 1) @ terms
        self.scales = np.linalg.eigvalsh(self.grams)[:, -1]

    def _value(self, frame: np.ndarray) -> float:
        V = frame[:, : self.rank]
        G = V.conj().T[None] @ (self.grams @ V)
        return math.sqrt(max(float(np.linalg.eigvalsh(G)[:, -1].max()), 0.0))

    def _diagonal_start(self) -> np.ndarray:
        if self.dim <= DIAG_ENUMERATION_LIMIT:
            witness = mu_diag_exhaustive(self.seq, self.t).witness
            dropped = np.flatnonzero(np.diag(witness.matrix).real < 0.5)
        else:
            weight = np.einsum("njj->nj", self.grams).real.max(axis=0)
            dropped = np.argsort(-weight, kind="stable")[: self.corank]
        kept = np.setdiff1d(np.arange(self.dim), dropped)
        return np.eye(self.dim)[:, np.concatenate([kept, np.sort(dropped)])]

    def _greedy_start(self) -> np.ndarray:
        V = np.eye(self.dim, dtype=self.grams.dtype)
        for _ in range(self.corank):
            G = V.conj().T[None] @ (self.grams @ V)
            worst = int(np.argmax(np.linalg.eigvalsh(G)[:, -1]))
            u = np.linalg.eigh(G[worst])[1][:, -1]
            V = V @ complete_frame(u[:, None])[:, 1:]
        return complete_frame(V)

    def _spectral_start(self, H: np.ndarray) -> np.ndarray:
        # eigh sorts ascending, so the range (small eigenvalues) comes first
        return np.linalg.eigh((H + H.conj().T) / 2)[1]

    def structured_starts(self) -> Iterator[Tuple[str, np.ndarray]]:
        yield "diagonal", self._diagonal_start()
        yield "greedy", self._greedy_start()
        yield "aggregate", self._spectral_start(self.grams.sum(axis=0))
        nonzero = self.scales > 0
        if nonzero.any():
            yield "aggregate-normalized", self._spectral_start(
                (self.grams[nonzero] / self.scales[nonzero][:, None, None]).sum(axis=0)
            )
        for n in np.argsort(-self.scales, kind="stable")[:PER_TERM_STARTS]:
            if self.scales[n] > 0:
                yield f"term-{int(n) + 1}", self._spectral_start(self.grams[n])

    def _start_pool(self) -> List[_Start]:
        size = max(1, self.budget // 10)
        frames = list(islice(self.structured_starts(), size))
        rng = make_rng(self.seed)
        while len(frames) < size:
            frames.append(("random", random_unitary(self.dim, rng, real=self.real)))
        return [_Start(index, kind, frame, self._value(frame)) for index, (kind, frame) in enumerate(frames)]

    def _estimate(self, frame: np.ndarray, method: MuMethod, iterations: int) -> MuEstimate:
        alg = self.seq.ambient
        if self.rank == 0:
            witness = Projection.zero(alg)
        else:
            V = frame[:, : self.rank]
            witness = clean_projection(V @ V.conj().T, alg)
        return MuEstimate(
            t=self.t,
            value=mu_eval(self.seq, witness),
            witness=witness,
            direction=MuDirection.UPPER_BOUND,
            method=method,
            iterations=iterations,
            seed=self.seed,
        )

    def spectral_estimate(self) -> MuEstimate:
        """Best structured start without any descent."""
        if self.corank == 0:
            return self._estimate(np.eye(self.dim), MuMethod.SPECTRAL_HEURISTIC, 0)
        starts = [_Start(i, kind, frame, self._value(frame)) for i, (kind, frame) in enumerate(self.structured_starts())]
        best = min(starts, key=lambda s: (s.value, s.index))
        return self._estimate(best.frame, MuMethod.SPECTRAL_HEURISTIC, len(starts))

    def run(self) -> MuEstimate:
        if self.corank == 0:
            return self._estimate(np.eye(self.dim), MuMethod.GRASSMANN_SEARCH, 0)
        starts = self._start_pool()
        chosen = sorted(starts, key=lambda s: (s.value, s.index))[: self.descents]
        remaining = self.budget - len(starts)
        share = remaining // len(chosen) if remaining > 0 else 0
        seeds = spawn_seeds(self.seed, len(chosen))
        logger.info(
            "μ search d=%d r=%d: %d starts, %d descents of %d evaluations",
            self.dim,
            self.rank,
            len(starts),
            len(chosen),
            share,
        )
        results = run_ordered(
            lambda job: _Descent(self, job[0], share, job[1]).run(),
            list(zip(chosen, seeds)),
            self.jobs,
        )
        candidates = [(s.value, s.index, s.frame) for s in starts]
        candidates += [(value, start.index, frame) for start, (value, frame, _) in zip(chosen, results)]
        value, index, frame = min(candidates, key=lambda c: (c[0], c[1]))
        used = len(starts) + sum(used for _, _, used in results)
        logger.info("μ search best value %.6g from start %d (%s)", value, index, starts[index].kind)
        return self._estimate(frame, MuMethod.GRASSMANN_SEARCH, used)


def mu_search(
    seq: MartingaleSequence,
    t: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    descents: int = DEFAULT_DESCENTS,
    jobs: Optional[int] = 1,
) -> MuEstimate:
    return ProjectionSearch(seq, t, budget, seed, descents, jobs).run()


def mu_spectral_heuristic(seq: MartingaleSequence, t: float) -> MuEstimate:
    return ProjectionSearch(seq, t, budget=1).spectral_estimate()


def certified_mu_estimate(p: ExponentLike, t: float, N: int) -> MuEstimate:
    """δ√N as a certified lower bound of μ_t^c((𝔼_n X_N)_n), valid for t ≤ t′(p)."""
    certificate = certified_lower_bound(p, t)
    if not certificate.applies:
        raise CertificateError(f"t = {t} exceeds t′ = {certificate.t_prime:.6g}: no certified bound")
    return MuEstimate(
        t=t,
        value=certificate.lower_bound(N),
        direction=MuDirection.CERTIFIED_LOWER_BOUND,
        method=MuMethod.ANALYTIC_CERTIFICATE,
    )


def _loglog_slope(rows: Sequence[GrowthRow]) -> Optional[float]:
    if len(rows) < 2 or any(row.searched <= 0 for row in rows):
        return None
    return float(np.polyfit(np.log([r.N for r in rows]), np.log([r.searched for r in rows]), 1)[0])


def growth_experiment(
    p: ExponentLike,
    t: float,
    N_list: Sequence[int],
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    descents: int = DEFAULT_DESCENTS,
    jobs: Optional[int] = 1,
    strict: bool = True,
) -> GrowthReport:
    """
    Growth of μ_t^c((𝔼_n X_N)_n) in N.

    Args:
        p: exponent certifying δ (0 < p < 1/2)
        t: corank budget
        N_list: factor sizes
        budget: objective evaluations per search
        seed: search seed, shared by every N
        descents: number of concurrent descents per search
        jobs: worker count of each search
        strict: raise when lower ≤ searched ≤ diagonal fails

    Returns:
        GrowthReport with one row per N, the least-squares slope of
        log(searched) against log(N) over all rows, and the same fit over the
        rows whose corank budget is at least ASYMPTOTIC_MIN_CORANK
    """
    certificate = certified_lower_bound(p, t)
    rows = []
    for N in N_list:
        seq = martingale_of_XN(N)
        certified = certified_mu_estimate(p, t, N).value if certificate.applies else None
        searched = mu_search(seq, t, budget, seed, descents, jobs).value
        diagonal = mu_diag_exhaustive(seq, t).value if N <= DIAG_ENUMERATION_LIMIT else None
        ordering_ok = (certified is None or _le(certified, searched)) and (
            diagonal is None or _le(searched, diagonal)
        )
        logger.info("growth N=%d searched=%.6g diagonal=%s", N, searched, diagonal)
        rows.append(
            GrowthRow(N=N, certified_lower=certified, searched=searched, diagonal=diagonal, ordering_ok=ordering_ok)
        )
    tail = [row for row in rows if corank_budget(row.N, t) >= ASYMPTOTIC_MIN_CORANK]
    slope, tail_slope = _loglog_slope(rows), _loglog_slope(tail)
    ordering_ok = all(row.ordering_ok for row in rows)
    report = GrowthReport(
        passed=ordering_ok,
        p=as_exponent(p).p,
        t=t,
        budget=budget,
        seed=seed,
        certificate_applies=certificate.applies,
        rows=rows,
        slope=slope,
        tail_slope=tail_slope,
        tail_sizes=[row.N for row in tail],
        ordering_ok=ordering_ok,
    )
    return report.enforce(strict)


def au_obstruction_report(
    p: ExponentLike,
    t: float,
    chain_p: ExponentLike = DEFAULT_CHAIN_P,
    n_max: int = DEFAULT_OBSTRUCTION_N_MAX,
) -> ObstructionReport:
    """
    Certified lower bounds δ (N!)^{1/p−1/2} N^{−2} of μ^c_{t/2}((ℰ_n 𝒳_p)_n) for
    N = 1..n_max, evaluated in the log domain. A strictly increasing tail that
    grows at least tenfold is reported as divergence, and a sequence with
    infinite μ^c cannot converge almost uniformly.
    """
    exponent = as_exponent(p)
    if not 1 <= exponent.p < 2:
        raise ExponentError(
            f"p = {exponent.p} outside [1, 2): the exponent 1/p − 1/2 must be positive for the bounds to diverge"
        )
    constants = chain_constants(chain_p)
    if t > constants.t_prime:
        raise CertificateError(f"t = {t} exceeds t′ = {constants.t_prime:.6g} for the chain exponent {constants.p}")
    power = exponent.reciprocal - 0.5
    log_bounds = [math.log(constants.delta) + power * math.lgamma(N + 1) - 2 * math.log(N) for N in range(1, n_max + 1)]
    bounds = [math.exp(value) if value < 700 else math.inf for value in log_bounds]

    onset = n_max
    while onset > 1 and log_bounds[onset - 2] < log_bounds[onset - 1]:
        onset -= 1
    growth_onset = onset if onset < n_max else None
    diverges = growth_onset is not None and log_bounds[-1] - log_bounds[growth_onset - 1] >= math.log(10)
    if diverges:
        conclusion = (
            f"lower bounds increase strictly from N = {growth_onset} and grow by a factor "
            f"{math.exp(log_bounds[-1] - log_bounds[growth_onset - 1]):.3g} up to N = {n_max}: "
            f"μ^c_{{t/2}} of the martingale is infinite, so it does not converge almost uniformly"
        )
    else:
        conclusion = f"no divergence visible up to N = {n_max}"
    return ObstructionReport(
        p=exponent.p,
        t=t,
        chain_p=constants.p,
        exponent=power,
        delta=constants.delta,
        t_prime=constants.t_prime,
        n_max=n_max,
        log_bounds=log_bounds,
        bounds=bounds,
        growth_onset=growth_onset,
        diverges=diverges,
        conclusion=conclusion,
    )
