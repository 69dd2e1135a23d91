import numpy as np
import pytest

from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import DimensionMismatchError, InequalityViolationError, LevelOutOfRangeError, MalformedAlgebraError
from app.model.filtration import FactorFiltrationLevel, TruncatedBigAlgebra
from app.model.martingale import MartingaleSequence
from app.service.condexp import (
    big_cond_exp,
    big_filtration,
    check_condexp_axioms,
    factor_cond_exp,
    factor_expectation,
    factor_filtration,
    level_mask,
    verify_martingale,
)
from app.service.counterexample import martingale_of_XN
from app.util.linalg import ginibre, make_rng


def test_level_mask_shape():
    mask = level_mask(4, 2)
    expected = np.array(
        [
            [1, 1, 0, 0],
            [1, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
        ]
    )
    assert np.array_equal(mask, expected)


def test_factor_cond_exp_keeps_block_and_diagonal():
    alg = TracialAlgebra.normalized(3)
    X = Operator(np.arange(9.0).reshape(3, 3), alg)
    E = factor_cond_exp(FactorFiltrationLevel(3, 1), X)
    assert np.array_equal(E.entries.real, np.diag([0.0, 4.0, 8.0]))
    with pytest.raises(DimensionMismatchError):
        factor_cond_exp(FactorFiltrationLevel(4, 1), X)


def test_level_zero_is_trace():
    X = Operator(np.diag([1.0, 2.0, 3.0, 6.0]), TracialAlgebra.normalized(4))
    assert np.allclose(factor_expectation(4, 0)(X).entries, 3.0 * np.eye(4))


@pytest.mark.parametrize("N", [4, 8])
def test_factor_levels_are_conditional_expectations(N):
    alg = TracialAlgebra.normalized(N)
    for n in range(0, N + 1):
        report = check_condexp_axioms(factor_expectation(N, n), alg, trials=100, seed=n)
        assert report.passed, (n, report.failures())


@pytest.mark.parametrize("n", [0, 1, 2, 3, 6, 7])
def test_big_levels_are_conditional_expectations(n):
    alg = TruncatedBigAlgebra(sign_count=2, factors=(2, 6))
    report = check_condexp_axioms(
        lambda X: big_cond_exp(alg, n, X),
        alg.algebra,
        trials=100,
        seed=n,
        sampler=alg.random_element,
    )
    assert report.passed, report.failures()


def test_non_expectation_is_caught():
    alg = TracialAlgebra.normalized(3)
    doubling = lambda X: X * 2.0  # noqa: E731
    report = check_condexp_axioms(doubling, alg, trials=5, strict=False)
    assert not report.passed
    assert not report.check("unital").passed
    assert report.check("unital").witness_trial == 0
    with pytest.raises(InequalityViolationError):
        check_condexp_axioms(doubling, alg, trials=5)


def test_big_levels_are_nested():
    alg = TruncatedBigAlgebra(sign_count=1, factors=(2, 6))
    X = alg.random_element(make_rng(7))
    for m, n in [(0, 1), (1, 2), (2, 5), (3, 6)]:
        inner = big_cond_exp(alg, m, big_cond_exp(alg, n, X))
        assert inner.allclose(big_cond_exp(alg, m, X), atol=1e-10)
    # beyond the largest factor every level is the identity on the algebra
    assert big_cond_exp(alg, 6, X).allclose(X, atol=1e-12)
    assert big_cond_exp(alg, 9, X).allclose(X, atol=1e-12)
    with pytest.raises(LevelOutOfRangeError):
        big_cond_exp(alg, -1, X)


def test_filtrations_expose_levels():
    assert list(factor_filtration(3).levels) == [0, 1, 2, 3]
    big = big_filtration(TruncatedBigAlgebra(sign_count=1, factors=(1, 2)))
    assert big.top == 2
    with pytest.raises(LevelOutOfRangeError):
        factor_filtration(3).level_map(4)


def test_martingale_of_XN_is_a_martingale():
    report = verify_martingale(martingale_of_XN(6))
    assert report.passed
    assert report.terms == 6


def test_non_martingale_is_reported():
    seq = martingale_of_XN(3)
    swapped = MartingaleSequence(
        ambient=seq.ambient,
        terms=tuple(reversed(seq.terms)),
        filtration=seq.filtration,
        term_levels=seq.term_levels,
    )
    report = verify_martingale(swapped, strict=False)
    assert not report.adapted_ok
    with pytest.raises(MalformedAlgebraError):
        verify_martingale(MartingaleSequence.of(seq.terms))


@pytest.mark.parametrize("N", [3, 5])
def test_factor_tower_property(N):
    X = Operator(ginibre(N, make_rng(N)), TracialAlgebra.normalized(N))
    for n in range(N + 1):
        for k in range(N + 1):
            composed = factor_expectation(N, n)(factor_expectation(N, k)(X))
            assert composed.allclose(factor_expectation(N, min(n, k))(X), atol=1e-12), (n, k)


def test_big_tower_property():
    alg = TruncatedBigAlgebra(sign_count=1, factors=(2, 3))
    X = alg.random_element(make_rng(11))
    for n in range(3):
        for k in range(3):
            composed = big_cond_exp(alg, n, big_cond_exp(alg, k, X))
            assert composed.allclose(big_cond_exp(alg, min(n, k), X), atol=1e-12), (n, k)


def test_level_zero_keeps_sign_and_traces_factor():
    alg = TruncatedBigAlgebra(sign_count=1, factors=(2,))
    X2 = ginibre(2, make_rng(3))
    sign = alg.sign_operator(1)
    Z = sign @ alg.embed(alg.factor_slot(2), X2)
    expected = sign.entries * (np.trace(X2) / 2)
    assert np.allclose(big_cond_exp(alg, 0, Z).entries, expected, atol=1e-12)
