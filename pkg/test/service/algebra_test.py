import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.model.algebra import Operator, Projection, TraceMode, TracialAlgebra
from app.model.errors import DimensionCapError, IndexOutOfRangeError, NotHermitianError
from app.service.algebra import (
    absolute_value,
    clean_projection,
    identity,
    matrix_unit,
    operator_le,
    projection_meet,
    projection_meet_all,
    random_projection,
    spectral_projection,
    tensor,
    tensor_algebra,
    trace,
)
from app.service.schatten import lp_norm, singular_values
from app.util.linalg import ginibre, make_rng, random_hermitian


def test_matrix_units_and_trace():
    alg = TracialAlgebra.normalized(3)
    e12 = matrix_unit(alg, 1, 2)
    assert e12.entries[0, 1] == 1
    assert trace(alg, identity(alg)) == pytest.approx(1.0)
    assert trace(TracialAlgebra.unnormalized(3), identity(TracialAlgebra.unnormalized(3))) == pytest.approx(3.0)
    with pytest.raises(IndexOutOfRangeError):
        matrix_unit(alg, 0, 1)
    with pytest.raises(IndexOutOfRangeError):
        matrix_unit(alg, 1, 4)


def test_trace_is_tracial():
    alg = TracialAlgebra.normalized(4)
    rng = make_rng(1)
    A = Operator(rng.standard_normal((4, 4)), alg)
    B = Operator(rng.standard_normal((4, 4)), alg)
    assert trace(alg, A @ B) == pytest.approx(trace(alg, B @ A))


def test_tensor_trace_is_multiplicative():
    tau, tr = TracialAlgebra.normalized(2), TracialAlgebra.unnormalized(3)
    rng = make_rng(2)
    A = Operator(rng.standard_normal((2, 2)), tau)
    B = Operator(rng.standard_normal((3, 3)), tr)
    AB = tensor(A, B)
    assert AB.algebra.trace_mode is TraceMode.MIXED
    assert AB.algebra.weight == pytest.approx(0.5)
    assert trace(AB.algebra, AB) == pytest.approx(trace(tau, A) * trace(tr, B))
    same = tensor_algebra(tau, TracialAlgebra.normalized(3))
    assert same.trace_mode is TraceMode.NORMALIZED and same.dim == 6


def test_tensor_cap():
    with pytest.raises(DimensionCapError):
        tensor_algebra(TracialAlgebra.normalized(64), TracialAlgebra.normalized(65))


def test_spectral_projection_closed_interval():
    alg = TracialAlgebra.normalized(3)
    H = Operator(np.diag([0.0, 1.0, 2.0]), alg)
    e = spectral_projection(H, 0.0, 1.0)
    assert e.rank == 2
    assert np.allclose(np.diag(e.matrix), [1, 1, 0])
    with pytest.raises(NotHermitianError):
        spectral_projection(Operator(np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]]), alg), 0, 1)


def test_absolute_value_of_shift():
    alg = TracialAlgebra.unnormalized(2)
    S = Operator(np.array([[0.0, 1.0], [0.0, 0.0]]), alg)
    assert np.allclose(absolute_value(S).entries, np.diag([0.0, 1.0]))


def test_meet_of_coordinate_projections():
    alg = TracialAlgebra.normalized(3)
    e1 = Projection.diagonal([1, 1, 0], alg)
    e2 = Projection.diagonal([0, 1, 1], alg)
    meet = projection_meet(e1, e2)
    assert np.allclose(meet.matrix, np.diag([0, 1, 0]))
    assert projection_meet_all([e1, e2, Projection.identity(alg)]).rank == 1
    assert operator_le(meet, e1) and operator_le(meet, e2)
    assert not operator_le(e1, meet)


def test_meet_of_generic_lines_is_zero():
    alg = TracialAlgebra.normalized(2)
    line = Projection.from_frame(np.array([1.0, 1.0]) / np.sqrt(2), alg)
    axis = Projection.diagonal([1, 0], alg)
    assert projection_meet(line, axis).rank == 0


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(0, 2**16), d=st.integers(2, 8), data=st.data())
def test_meet_complement_is_subadditive(seed, d, data):
    alg = TracialAlgebra.normalized(d)
    rng = make_rng(seed)
    r1 = data.draw(st.integers(0, d))
    r2 = data.draw(st.integers(0, d))
    e1, e2 = random_projection(alg, r1, rng), random_projection(alg, r2, rng)
    meet = projection_meet(e1, e2)
    assert meet.normalized_corank <= e1.normalized_corank + e2.normalized_corank + 1e-12
    assert operator_le(meet, e1, tol=1e-8) and operator_le(meet, e2, tol=1e-8)


def test_clean_projection_rounds_spectrum():
    alg = TracialAlgebra.normalized(4)
    e = random_projection(alg, 2, make_rng(4))
    noisy = e.matrix + 1e-7 * random_hermitian(4, make_rng(5))
    cleaned = clean_projection(noisy, alg)
    assert cleaned.rank == 2
    assert np.abs(cleaned.matrix - e.matrix).max() < 1e-5


def test_random_projection_rank_bounds():
    alg = TracialAlgebra.normalized(3)
    with pytest.raises(IndexOutOfRangeError):
        random_projection(alg, 4, make_rng(0))
    assert random_projection(alg, 3, make_rng(0), real=True).rank == 3


@pytest.mark.parametrize("seed", range(4))
def test_tensor_singular_values_are_pairwise_products(seed):
    rng = make_rng(seed)
    alg = TracialAlgebra.normalized(2)
    A, B = Operator(ginibre(2, rng), alg), Operator(ginibre(2, rng), alg)
    expected = np.sort(np.outer(singular_values(A), singular_values(B)).ravel())[::-1]
    assert np.allclose(singular_values(tensor(A, B)), expected)


@pytest.mark.parametrize("seed", range(4))
def test_spectral_projections_of_a_split_partition_identity(seed):
    alg = TracialAlgebra.normalized(5)
    H = Operator(random_hermitian(5, make_rng(seed)), alg)
    values = np.linalg.eigvalsh(H.entries)
    cut = (values[1] + values[2]) / 2
    below = spectral_projection(H, values[0] - 1, cut)
    above = spectral_projection(H, cut, values[-1] + 1)
    assert below.rank == 2 and above.rank == 3
    assert np.allclose(below.matrix + above.matrix, np.eye(5), atol=1e-10)
    assert np.allclose(below.matrix @ above.matrix, 0, atol=1e-10)


@pytest.mark.parametrize("level", [0.1, 0.5, 1.0, 2.0])
def test_spectral_tail_obeys_markov_bound(level):
    alg = TracialAlgebra.normalized(6)
    Z = Operator(ginibre(6, make_rng(13)), alg)
    head = spectral_projection(absolute_value(Z), 0.0, level)
    assert head.normalized_corank <= lp_norm(alg, Z, 1) / level + 1e-12
