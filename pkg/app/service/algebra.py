from functools import reduce
from typing import Sequence

import numpy as np

from app.config.lab_config import DIM_CAP, HERMITIAN_TOL, PROJECTION_TOL
from app.model.algebra import Operator, Projection, TraceMode, TracialAlgebra
from app.model.errors import (
    DimensionCapError,
    DimensionMismatchError,
    IndexOutOfRangeError,
    NotHermitianError,
)
from app.util.linalg import hermitian_part, random_frame


def identity(alg: TracialAlgebra) -> Operator:
    return Operator(np.eye(alg.dim), alg)


def matrix_unit(alg: TracialAlgebra, i: int, j: int) -> Operator:
    """Matrix unit e_{i,j} (1-based indices)."""
    if not (1 <= i <= alg.dim and 1 <= j <= alg.dim):
        raise IndexOutOfRangeError(f"matrix unit ({i}, {j}) outside 1..{alg.dim}")
    entries = np.zeros((alg.dim, alg.dim))
    entries[i - 1, j - 1] = 1.0
    return Operator(entries, alg)


def trace(alg: TracialAlgebra, A: Operator) -> complex:
    if A.dim != alg.dim:
        raise DimensionMismatchError(f"operator of dimension {A.dim} is not in M_{alg.dim}")
    return complex(alg.weight * np.trace(A.entries))


def tensor_algebra(alg1: TracialAlgebra, alg2: TracialAlgebra, dim_cap: int = DIM_CAP) -> TracialAlgebra:
    dim = alg1.dim * alg2.dim
    if dim > dim_cap:
        raise DimensionCapError(f"product dimension {dim} exceeds the cap {dim_cap}")
    if alg1.trace_mode is alg2.trace_mode and alg1.trace_mode is not TraceMode.MIXED:
        return TracialAlgebra(dim=dim, trace_mode=alg1.trace_mode)
    return TracialAlgebra(dim=dim, trace_mode=TraceMode.MIXED, weight=alg1.weight * alg2.weight)


def tensor(A: Operator, B: Operator, dim_cap: int = DIM_CAP) -> Operator:
    """Kronecker product A ⊗ B in the product algebra (trace is multiplicative)."""
    alg = tensor_algebra(A.algebra, B.algebra, dim_cap)
    return Operator(np.kron(A.entries, B.entries), alg)


def clean_projection(matrix: np.ndarray, alg: TracialAlgebra) -> Projection:
    """
    Re-symmetrize a nearly-projection matrix, round its spectrum to {0, 1} and
    rebuild it, so drift from meets and long chains never accumulates.
    """
    values, vectors = np.linalg.eigh(hermitian_part(np.asarray(matrix, dtype=np.complex128)))
    kept = vectors[:, values > 0.5]
    return Projection.from_frame(kept, alg)


def _require_hermitian(H: Operator):
    gap = np.linalg.norm(H.entries - H.entries.conj().T, ord=2)
    if gap > HERMITIAN_TOL:
        raise NotHermitianError(f"operator is not Hermitian (‖H − H*‖ = {gap:.3e})")


def spectral_projection(H: Operator, lo: float, hi: float) -> Projection:
    """
    Spectral projection 1_{[lo, hi]}(H). Eigenvalues within PROJECTION_TOL of
    an endpoint belong to the (closed) interval.
    """
    _require_hermitian(H)
    values, vectors = np.linalg.eigh(hermitian_part(H.entries))
    inside = (values >= lo - PROJECTION_TOL) & (values <= hi + PROJECTION_TOL)
    return Projection.from_frame(vectors[:, inside], H.algebra)


def absolute_value(Z: Operator) -> Operator:
    """|Z| = (Z*Z)^{1/2}."""
    values, vectors = np.linalg.eigh(hermitian_part(Z.entries.conj().T @ Z.entries))
    roots = np.sqrt(np.clip(values, 0.0, None))
    return Operator((vectors * roots) @ vectors.conj().T, Z.algebra)


def projection_meet(e1: Projection, e2: Projection) -> Projection:
    """e1 ∧ e2: projection onto range(e1) ∩ range(e2)."""
    if e1.dim != e2.dim:
        raise DimensionMismatchError(f"projections of dimension {e1.dim} and {e2.dim}")
    identity_matrix = np.eye(e1.dim)
    defect = (identity_matrix - e1.matrix) + (identity_matrix - e2.matrix)
    values, vectors = np.linalg.eigh(hermitian_part(defect))
    return Projection.from_frame(vectors[:, values <= PROJECTION_TOL], e1.algebra)


def projection_meet_all(projections: Sequence[Projection]) -> Projection:
    return reduce(projection_meet, projections)


def operator_le(lower: Projection, upper: Projection, tol: float = PROJECTION_TOL) -> bool:
    """lower ≤ upper as positive operators."""
    gap = hermitian_part(upper.matrix - lower.matrix)
    return bool(np.linalg.eigvalsh(gap).min() >= -tol)


def random_projection(alg: TracialAlgebra, rank: int, rng: np.random.Generator, real: bool = False) -> Projection:
    if not 0 <= rank <= alg.dim:
        raise IndexOutOfRangeError(f"rank {rank} outside 0..{alg.dim}")
    return Projection.from_frame(random_frame(alg.dim, rank, rng, real=real), alg)
