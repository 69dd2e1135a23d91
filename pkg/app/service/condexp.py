import logging
from typing import Callable, Optional

import numpy as np

from app.config.lab_config import CONDEXP_TOL, INEQUALITY_RTOL, INFINITY
from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import DimensionMismatchError, LevelOutOfRangeError, MalformedAlgebraError
from app.model.filtration import (
    FactorFiltrationLevel,
    Filtration,
    FiltrationKind,
    TruncatedBigAlgebra,
)
from app.model.martingale import MartingaleSequence
from app.model.reports import AxiomCheck, CondExpReport, MartingaleReport
from app.service.algebra import identity, trace
from app.service.schatten import lp_norm
from app.util.linalg import ginibre, hermitian_part, make_rng

logger = logging.getLogger(__name__)

OperatorMap = Callable[[Operator], Operator]
Sampler = Callable[[np.random.Generator], Operator]


def level_mask(N: int, n: int) -> np.ndarray:
    """0/1 mask of M_n ⊕ ℓ_∞^{N−n}: the upper-left n×n block plus the diagonal."""
    mask = np.eye(N)
    mask[:n, :n] = 1.0
    return mask


def factor_cond_exp(lvl: FactorFiltrationLevel, X: Operator) -> Operator:
    """
    𝔼_n on M_N: keeps the upper-left n×n block, keeps only the diagonal of the
    lower-right block and zeroes the off-diagonal blocks.
    """
    if X.dim != lvl.ambient:
        raise DimensionMismatchError(f"operator of dimension {X.dim} given to 𝔼_{lvl.level} on M_{lvl.ambient}")
    return Operator(X.entries * level_mask(lvl.ambient, lvl.level), X.algebra)


def factor_expectation(N: int, n: int) -> OperatorMap:
    """Level n of the factor filtration for 0 ≤ n ≤ N; level 0 is τ_N(·)1."""
    if n == 0:

        def expectation(X: Operator) -> Operator:
            if X.dim != N:
                raise DimensionMismatchError(f"operator of dimension {X.dim} given to 𝔼_0 on M_{N}")
            return Operator(np.trace(X.entries) / N * np.eye(N), X.algebra)

        return expectation
    lvl = FactorFiltrationLevel(ambient=N, level=n)
    return lambda X: factor_cond_exp(lvl, X)


def factor_filtration(N: int) -> Filtration:
    return Filtration(
        kind=FiltrationKind.FACTOR,
        top=N,
        algebra=TracialAlgebra.normalized(N),
        expectation=lambda n, X: factor_expectation(N, n)(X),
    )


def _apply_on_slot(tensor: np.ndarray, slot: int, slots: int, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    moved = np.moveaxis(tensor, (slot, slot + slots), (-2, -1))
    return np.moveaxis(fn(moved), (-2, -1), (slot, slot + slots))


def big_cond_exp(alg: TruncatedBigAlgebra, n: int, X: Operator) -> Operator:
    """
    ℰ_n on the truncated big algebra.

    Sign slots keep their diagonal (elements of the algebra are diagonal there
    already). A factor M_N with N ≤ n is left untouched, a larger one gets the
    factor expectation at level n; at n = 0 every factor is replaced by its
    normalized trace times the identity.

    Args:
        alg: the truncation
        n: level, any n ≥ 0 (levels beyond the largest factor act as the identity)
        X: operator of the truncated algebra

    Returns:
        ℰ_n(X)
    """
    if n < 0:
        raise LevelOutOfRangeError(f"negative level {n}")
    if X.dim != alg.dim:
        raise DimensionMismatchError(f"operator of dimension {X.dim} given to a truncation of dimension {alg.dim}")
    slots = len(alg.slot_dims)
    tensor = alg.as_tensor(X).copy()
    for k in range(alg.sign_count):
        tensor = _apply_on_slot(tensor, k, slots, lambda block: block * np.eye(2))
    for j, size in enumerate(alg.factors, start=alg.sign_count):
        if n == 0:
            tensor = _apply_on_slot(
                tensor,
                j,
                slots,
                lambda block, size=size: np.trace(block, axis1=-2, axis2=-1)[..., None, None] / size * np.eye(size),
            )
        elif size > n:
            mask = level_mask(size, n)
            tensor = _apply_on_slot(tensor, j, slots, lambda block, mask=mask: block * mask)
    return alg.from_tensor(tensor)


def big_filtration(alg: TruncatedBigAlgebra) -> Filtration:
    return Filtration(
        kind=FiltrationKind.BIG,
        top=alg.max_factor,
        algebra=alg.algebra,
        expectation=lambda n, X: big_cond_exp(alg, n, X),
    )


def _max_abs(matrix: np.ndarray) -> float:
    return float(np.abs(matrix).max(initial=0.0))


class _Axiom:
    def __init__(self, name: str, tol: float):
        self.name = name
        self.tol = tol
        self.worst = 0.0
        self.witness: Optional[int] = None

    def record(self, trial: int, error: float):
        if error > self.worst:
            self.worst = error
        if error > self.tol and self.witness is None:
            self.witness = trial

    def result(self) -> AxiomCheck:
        return AxiomCheck(name=self.name, passed=self.witness is None, worst=self.worst, witness_trial=self.witness)


def check_condexp_axioms(
    E: OperatorMap,
    alg: TracialAlgebra,
    trials: int = 100,
    seed: int = 0,
    sampler: Optional[Sampler] = None,
    tol: float = CONDEXP_TOL,
    strict: bool = True,
) -> CondExpReport:
    """
    Checks that E behaves like a conditional expectation on random inputs.

    Axioms: trace preservation, unitality, idempotence, positivity on x*x,
    bimodule property for a, b taken from the range of E, adjoint preservation,
    and L_p contractivity for p ∈ {1, 2, ∞}. Errors are scaled by the size of
    the quantity compared; the first failing trial is kept as a witness.

    Args:
        E: the candidate map
        alg: the algebra E acts on
        trials: number of random inputs
        seed: seed of the input generator
        sampler: draws one input (Ginibre operators of ``alg`` by default)
        tol: tolerance of every axiom
        strict: raise InequalityViolationError when an axiom fails

    Returns:
        CondExpReport with one AxiomCheck per axiom
    """
    rng = make_rng(seed)
    draw = sampler or (lambda g: Operator(ginibre(alg.dim, g), alg))
    axioms = {
        name: _Axiom(name, tol)
        for name in ("trace", "unital", "idempotent", "positive", "bimodule", "adjoint", "contractive")
    }

    one = identity(alg)
    axioms["unital"].record(0, _max_abs((E(one) - one).entries))

    for trial in range(trials):
        x = draw(rng)
        ex = E(x)
        scale = max(1.0, _max_abs(x.entries))
        axioms["trace"].record(trial, abs(trace(alg, ex) - trace(alg, x)) / scale)
        axioms["idempotent"].record(trial, _max_abs((E(ex) - ex).entries) / scale)
        axioms["adjoint"].record(trial, _max_abs((E(x.adjoint()) - ex.adjoint()).entries) / scale)

        positive = E(x.adjoint() @ x)
        smallest = float(np.linalg.eigvalsh(hermitian_part(positive.entries)).min())
        axioms["positive"].record(trial, max(0.0, -smallest) / max(1.0, _max_abs(positive.entries)))

        a, b = E(draw(rng)), E(draw(rng))
        expected = a @ ex @ b
        axioms["bimodule"].record(
            trial, _max_abs((E(a @ x @ b) - expected).entries) / max(1.0, _max_abs(expected.entries))
        )

        excess = 0.0
        for p in (1, 2, INFINITY):
            before, after = lp_norm(alg, x, p), lp_norm(alg, ex, p)
            excess = max(excess, (after - before * (1 + INEQUALITY_RTOL)) / max(1.0, before))
        axioms["contractive"].record(trial, max(0.0, excess))

    checks = [axiom.result() for axiom in axioms.values()]
    report = CondExpReport(passed=all(c.passed for c in checks), trials=trials, checks=checks)
    if not report.passed:
        logger.info("conditional expectation axioms failed: %s", report.failures())
    return report.enforce(strict)


def verify_martingale(seq: MartingaleSequence, tol: float = CONDEXP_TOL, strict: bool = True) -> MartingaleReport:
    """Adaptedness ℰ_{n_k}(Y_k) = Y_k and the martingale property ℰ_{n_k}(Y_{k+1}) = Y_k."""
    if seq.filtration is None or seq.term_levels is None:
        raise MalformedAlgebraError("verifying a martingale needs a filtration and term levels")
    adaptedness, martingale = 0.0, 0.0
    terms, levels = seq.terms, seq.term_levels
    for k, (term, level) in enumerate(zip(terms, levels)):
        E = seq.filtration.level_map(level)
        adaptedness = max(adaptedness, _max_abs((E(term) - term).entries))
        if k + 1 < len(terms):
            martingale = max(martingale, _max_abs((E(terms[k + 1]) - term).entries))
    report = MartingaleReport(
        passed=adaptedness <= tol and martingale <= tol,
        terms=len(terms),
        adaptedness_error=adaptedness,
        martingale_error=martingale,
        adapted_ok=adaptedness <= tol,
        martingale_ok=martingale <= tol,
    )
    return report.enforce(strict)
