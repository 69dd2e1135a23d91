import math

import numpy as np
import pytest

from app.model.algebra import Projection, TracialAlgebra
from app.model.errors import (
    ContractionViolationError,
    CorankViolationError,
    DimensionCapError,
    DimensionMismatchError,
    ExponentError,
)
from app.model.filtration import TruncatedBigAlgebra
from app.service.algebra import random_projection
from app.service.condexp import factor_expectation
from app.service.counterexample import (
    D_block,
    Y_block,
    build_A,
    build_B,
    build_C,
    build_Tn,
    build_truncated_Xp,
    build_XN,
    build_xi,
    certified_lower_bound,
    chain_constants,
    chain_verify,
    flip_identity_check,
    half_sup,
    martingale_of_XN,
    retained_terms,
    sign_flip,
    tn_bounds_check,
    vk_recursion_check,
)
from app.service.rearrangement import corank_budget
from app.util.linalg import make_rng, spawn_seeds

P_GRID = [0.1, 0.25, 0.4, 0.49]


def test_xi_and_XN():
    xi = build_xi(3)
    assert np.array_equal(xi.entries.real, np.array([[1, 0, 0], [1, 0, 0], [1, 0, 0]]))
    assert np.array_equal(build_XN(3).entries.real, np.ones((3, 3)))


@pytest.mark.parametrize("N", [1, 2, 5, 9])
def test_conditional_expectations_of_XN(N):
    X = build_XN(N)
    for n in range(1, N + 1):
        closed = Y_block(N, n) + D_block(N, n)
        assert np.allclose(factor_expectation(N, n)(X).entries, closed)
    seq = martingale_of_XN(N)
    assert len(seq) == N
    assert seq.term_levels == tuple(range(1, N + 1))


def test_Tn_is_upper_triangular_ones():
    assert np.array_equal(build_Tn(3).entries.real, np.triu(np.ones((3, 3))))


@pytest.mark.parametrize("p", P_GRID)
@pytest.mark.parametrize("n", [1, 2, 3, 7, 16])
def test_tn_sandwich(n, p):
    report = tn_bounds_check(n, p)
    assert report.passed
    assert report.shift_identity_ok


@pytest.mark.parametrize("p", P_GRID)
def test_tn_n1_is_exactly_one(p):
    report = tn_bounds_check(1, p)
    assert report.computed == pytest.approx(1.0, abs=1e-12)
    assert report.shift_norm == 0.0


@pytest.mark.slow
@pytest.mark.parametrize("p", P_GRID)
def test_tn_sandwich_full_grid(p):
    for n in range(1, 65):
        assert tn_bounds_check(n, p).passed, n


def test_tn_rejects_p_at_least_one():
    with pytest.raises(ExponentError):
        tn_bounds_check(3, 1.0)


@pytest.mark.parametrize("p", P_GRID)
def test_vk_recursion(p):
    report = vk_recursion_check(6, p)
    assert report.passed
    assert report.values[0] == pytest.approx(1.0)


def test_vk_recursion_cap():
    with pytest.raises(DimensionCapError):
        vk_recursion_check(13, 0.25)


def test_chain_constants_at_quarter():
    constants = chain_constants(0.25)
    assert constants.c_p == pytest.approx(2.0**-9)
    assert constants.t_prime == pytest.approx(0.001618, rel=1e-3)
    assert constants.delta == pytest.approx(6.1e-5, rel=1e-2)
    with pytest.raises(ExponentError):
        chain_constants(0.5)


def test_certified_bound_applies_below_t_prime():
    assert certified_lower_bound(0.25, 1e-3).applies
    assert certified_lower_bound(0.25, 1e-3).lower_bound(16) == pytest.approx(4 * chain_constants(0.25).delta)
    assert not certified_lower_bound(0.25, 0.1).applies
    assert certified_lower_bound(0.25, 0.1).lower_bound(16) is None
    # the boundary t = t′ is certified
    assert certified_lower_bound(0.25, chain_constants(0.25).t_prime).applies


def test_A_equals_B_plus_C_for_identity():
    N = 4
    e = Projection.identity(TracialAlgebra.normalized(N))
    m = half_sup(N, e)
    assert m == pytest.approx(N / 2)
    A, B, C = build_A(N), build_B(N, e, m), build_C(N, e)
    assert np.abs((A - B - C).entries).max() < 1e-12
    assert np.abs(C.entries).max() == 0


def test_B_rejects_small_m():
    N = 4
    e = Projection.identity(TracialAlgebra.normalized(N))
    with pytest.raises(ContractionViolationError):
        build_B(N, e, half_sup(N, e) / 2)


@pytest.mark.parametrize("N", [4, 8, 16])
def test_chain_holds_on_random_projections(N):
    p, t = 0.25, 0.125
    alg = TracialAlgebra.normalized(N)
    rank = N - corank_budget(N, t)
    for seed in spawn_seeds(N, 50):
        e = random_projection(alg, rank, make_rng(seed))
        report = chain_verify(N, p, t, e)
        assert report.passed
        assert report.norm_A >= N / 2**9
        assert report.decomposition_residual <= 1e-9
        assert report.max_contraction <= 1 + 1e-9


def test_chain_certificate_below_t_prime():
    N, t = 16, 1e-3
    e = Projection.identity(TracialAlgebra.normalized(N))
    report = chain_verify(N, 0.25, t, e)
    assert report.certificate_applies
    assert report.certified_m_lower <= report.m


def test_chain_rejects_bad_inputs():
    alg = TracialAlgebra.normalized(4)
    with pytest.raises(CorankViolationError):
        chain_verify(4, 0.25, 0.125, Projection.diagonal([1, 1, 0, 0], alg))
    with pytest.raises(DimensionMismatchError):
        chain_verify(8, 0.25, 0.125, Projection.identity(alg))
    with pytest.raises(ExponentError):
        chain_verify(4, 0.5, 0.125, Projection.identity(alg))


def test_truncated_partial_sum_layout():
    alg = TruncatedBigAlgebra(sign_count=2, factors=(1, 2))
    assert retained_terms(alg) == (1, 2)
    X = build_truncated_Xp(alg, 1.0, (1, 2))
    # π flips the sign of every summand living on the flipped coordinate
    flipped = sign_flip(alg, 2, sign_flip(alg, 2, X))
    assert flipped.allclose(X, atol=1e-14)


def test_flip_identity():
    alg = TruncatedBigAlgebra(sign_count=2, factors=(1, 2))
    report = flip_identity_check(alg, 1.0, 2)
    assert report.passed
    assert report.identity_error <= 1e-10
    assert max(report.commute_errors) <= 1e-10


def test_flip_identity_larger_truncation():
    alg = TruncatedBigAlgebra(sign_count=2, factors=(1, 2, 6), dim_cap=4096)
    report = flip_identity_check(alg, 1.5, 2, terms=(1, 2), seed=3)
    assert report.passed
    assert math.isclose(report.p, 1.5)


def test_truncated_partial_sum_is_self_adjoint():
    alg = TruncatedBigAlgebra(sign_count=2, factors=(1, 2))
    for p in (0.25, 1.0, 2.0):
        X = build_truncated_Xp(alg, p, retained_terms(alg))
        assert X.allclose(X.adjoint(), atol=1e-14)


@pytest.mark.filterwarnings("error")
def test_report_flags_are_plain_bools():
    tn = tn_bounds_check(7, 0.25)
    assert all(type(flag) is bool for flag in (tn.passed, tn.lower_ok, tn.upper_ok, tn.shift_identity_ok))
    alg = TracialAlgebra.normalized(8)
    e = random_projection(alg, 8 - corank_budget(8, 0.125), make_rng(2))
    chain = chain_verify(8, 0.25, 0.125, e)
    assert type(chain.passed) is bool
    assert type(chain.certificate_applies) is bool
    assert chain.model_dump_json()
