import math

import numpy as np
import pytest

from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import (
    AlphaOrderError,
    CorankViolationError,
    ExponentError,
    IndexOutOfRangeError,
    MalformedAlgebraError,
)
from app.service.algebra import identity, trace
from app.service.condexp import factor_expectation, factor_filtration
from app.service.counterexample import build_XN
from app.service.ergodic import (
    PHASE_CONVENTION,
    cesaro_checkpoints,
    check_markov_invariants,
    conj_average,
    conjugation_markov,
    convex_markov,
    diagonal_unitary,
    dirichlet_average,
    dirichlet_factor,
    ergodic_average,
    find_subsequence,
    geometric_alphas,
    identity_markov,
    markov_from_map,
    separated_alphas,
    truncate_and_meet,
    unitary_approx_check,
    unitary_phases,
)
from app.service.schatten import lp_norm_power
from app.util.linalg import ginibre, make_rng, random_hermitian, random_unitary


def test_alpha_schedules():
    assert geometric_alphas(3) == [0.0, 0.5, 0.75, 0.875]
    alphas = separated_alphas(3, ratio=10.0)
    assert alphas == pytest.approx([0.0, 0.01, 0.1, 1.0])
    with pytest.raises(AlphaOrderError):
        separated_alphas(0)
    with pytest.raises(AlphaOrderError):
        convex_markov([0.0, 0.5, 0.5], factor_filtration(2))
    with pytest.raises(AlphaOrderError):
        convex_markov([0.1, 0.5], factor_filtration(2))


def test_markov_from_map_matches_direct_application():
    alg = TracialAlgebra.normalized(3)
    E = factor_expectation(3, 1)
    T = markov_from_map(alg, E, level=1)
    x = Operator(ginibre(3, make_rng(0)), alg)
    assert T(x).allclose(E(x), atol=1e-12)
    assert T.parameters == {"level": 1}
    assert T.compose(identity_markov(alg))(x).allclose(T(x), atol=1e-12)


def test_convex_markov_scales_increments():
    filtration = factor_filtration(3)
    alphas = geometric_alphas(3)
    T = convex_markov(alphas, filtration)
    x = Operator(ginibre(3, make_rng(1)), filtration.algebra)
    for j in range(1, 4):
        increment = filtration.level_map(j)(x) - filtration.level_map(j - 1)(x)
        assert T(increment).allclose(increment * (1 - alphas[j]), atol=1e-12)


def test_convex_markov_with_geometric_alphas_is_markov():
    filtration = factor_filtration(4)
    T = convex_markov(geometric_alphas(4), filtration)
    report = check_markov_invariants(T, trials=100, seed=0)
    assert report.passed
    subsequence = find_subsequence(T, build_XN(4), 1.0, 0.05)
    assert [level.level for level in subsequence.levels] == [0, 1, 2, 3, 4]
    assert all(level.m >= 1 for level in subsequence.levels)
    assert subsequence.total_error == pytest.approx(sum(level.error for level in subsequence.levels))


def test_subsequence_with_separated_alphas():
    filtration = factor_filtration(4)
    T = convex_markov(separated_alphas(4), filtration)
    report = find_subsequence(T, build_XN(4), 1.0, 0.05, strict=True)
    assert report.total_error <= 1.0
    assert all(level.reached for level in report.levels)
    ms = [level.m for level in report.levels]
    assert ms == sorted(ms, reverse=True)


def test_subsequence_rejects_bad_tolerance():
    T = convex_markov(geometric_alphas(2), factor_filtration(2))
    with pytest.raises(ExponentError):
        find_subsequence(T, build_XN(2), 1.0, 0.0)


def test_cesaro_checkpoints_match_iteration():
    T = convex_markov(geometric_alphas(3), factor_filtration(3))
    x = Operator(ginibre(3, make_rng(2)), T.algebra)
    checkpoints = cesaro_checkpoints(T, x, 4)
    assert [average.n for average in checkpoints] == [1, 2, 4, 8, 16]
    for average in checkpoints:
        assert average.value.allclose(ergodic_average(T, x, average.n), atol=1e-12)
    with pytest.raises(IndexOutOfRangeError):
        ergodic_average(T, x, 0)


def test_truncate_and_meet():
    alg = TracialAlgebra.normalized(6)
    rng = make_rng(10)
    Z = [Operator(4 * random_hermitian(6, rng), alg) for _ in range(5)]
    t = 0.2
    e, report = truncate_and_meet(Z, t, 1.0)
    threshold = t ** -1.0
    assert report.passed
    one = identity(alg)
    assert trace(alg, one - e.operator).real <= sum(report.complements) + 1e-12
    for Z_n, complement in zip(Z, report.complements):
        assert np.linalg.norm((Z_n @ e.operator).entries, ord=2) <= threshold * (1 + 1e-9)
        assert complement <= threshold**-1 * lp_norm_power(alg, Z_n, 1.0) * (1 + 1e-9)
    assert any(c > 0 for c in report.complements)
    assert report.mu_value <= threshold * (1 + 1e-9)
    assert report.meet_ok


def test_truncate_and_meet_rejections():
    alg = TracialAlgebra.normalized(2)
    Z = [identity(alg)]
    with pytest.raises(ExponentError):
        truncate_and_meet(Z, 0.2, 0.5)
    with pytest.raises(CorankViolationError):
        truncate_and_meet(Z, 1.5, 1.0)


def test_unitary_phases_convention():
    assert np.allclose(unitary_phases(3, 4), [4.0**-3, 4.0**-2, 4.0**-1])
    assert PHASE_CONVENTION == "phi_k = K^-(N-k+1)"
    with pytest.raises(IndexOutOfRangeError):
        unitary_phases(2, 1)


def test_dirichlet_factor_special_values():
    assert dirichlet_factor(0.0, 10) == pytest.approx(1.0)
    assert dirichlet_factor(3.0, 10) == pytest.approx(1.0)
    assert abs(dirichlet_factor(0.1, 10)) == pytest.approx(0.0, abs=1e-12)
    assert abs(dirichlet_factor(0.5, 2)) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(IndexOutOfRangeError):
        dirichlet_factor(0.1, 0)


@pytest.mark.parametrize("N,K", [(2, 3), (3, 2), (3, 5)])
@pytest.mark.parametrize("L", [1, 2, 7, 64])
def test_dirichlet_matches_explicit_conjugations(N, K, L):
    U = diagonal_unitary(N, K)
    x = Operator(ginibre(N, make_rng(L)), U.algebra)
    explicit = np.zeros((N, N), dtype=np.complex128)
    power = np.eye(N, dtype=np.complex128)
    for _ in range(L):
        explicit += power @ x.entries @ power.conj().T
        power = U.entries @ power
    explicit /= L
    assert np.abs(dirichlet_average(unitary_phases(N, K), x, L).entries - explicit).max() <= 1e-10
    assert np.abs(conj_average(U, x, L).entries - explicit).max() <= 1e-10
    assert np.abs(ergodic_average(conjugation_markov(U), x, L).entries - explicit).max() <= 1e-10


def test_conjugation_is_markov():
    U = diagonal_unitary(3, 4)
    assert check_markov_invariants(conjugation_markov(U), trials=20).passed


def test_non_markov_map_is_reported():
    alg = TracialAlgebra.normalized(2)
    T = markov_from_map(alg, lambda x: x * 2.0)
    report = check_markov_invariants(T, trials=5, strict=False)
    assert not report.unital_ok
    assert not report.trace_ok


@pytest.mark.parametrize("N", [2, 3])
def test_unitary_approximation_finds_K(N):
    K_list = [2**k for k in range(1, 11)]
    report = unitary_approx_check(N, K_list, 1.0, trials=100, seed=0)
    assert report.passed
    assert report.minimal_K in K_list
    assert report.unitary_gap == pytest.approx(2 * math.sin(math.pi / report.minimal_K))
    assert report.gap_target == 2.0**-N
    assert report.phase_convention == PHASE_CONVENTION
    assert [row.K for row in report.rows] == K_list
    first = next(row for row in report.rows if row.holds)
    assert first.K == report.minimal_K
    assert first.worst_lhs <= first.worst_rhs * (1 + 1e-9)


def test_convex_markov_commutes_with_every_level():
    filtration = factor_filtration(3)
    T = convex_markov(geometric_alphas(3), filtration)
    x = Operator(ginibre(3, make_rng(8)), filtration.algebra)
    for n in range(4):
        level = filtration.level_map(n)
        assert T(level(x)).allclose(level(T(x)), atol=1e-12)


def test_conj_average_fixes_diagonal_operators():
    U = diagonal_unitary(3, 2)
    x = Operator(np.diag([1.0, -2.0, 0.5j]), U.algebra)
    for L in (1, 3, 10):
        assert conj_average(U, x, L).allclose(x, atol=1e-12)


def test_conj_average_settles_on_the_diagonal():
    # phases 1/16 and 1/4: the off-diagonal Dirichlet factor vanishes once 16 divides L
    U = diagonal_unitary(2, 4)
    x = Operator(ginibre(2, make_rng(6)), U.algebra)
    diagonal = Operator(np.diag(np.diag(x.entries)), U.algebra)
    assert not conj_average(U, x, 8).allclose(diagonal, atol=1e-6)
    for L in (16, 32, 64):
        assert conj_average(U, x, L).allclose(diagonal, atol=1e-12)


@pytest.mark.parametrize("L", [1, 4, 9])
def test_conj_average_with_a_non_diagonal_unitary(L):
    rng = make_rng(L)
    alg = TracialAlgebra.normalized(3)
    U = Operator(random_unitary(3, rng), alg)
    x = Operator(ginibre(3, rng), alg)
    explicit = np.zeros((3, 3), dtype=np.complex128)
    power = np.eye(3, dtype=np.complex128)
    for _ in range(L):
        explicit += power @ x.entries @ power.conj().T
        power = U.entries @ power
    assert np.abs(conj_average(U, x, L).entries - explicit / L).max() <= 1e-10


def test_conj_average_rejects_non_unitaries():
    alg = TracialAlgebra.normalized(2)
    with pytest.raises(MalformedAlgebraError):
        conj_average(Operator(np.diag([2.0, 1.0]), alg), identity(alg), 4)
