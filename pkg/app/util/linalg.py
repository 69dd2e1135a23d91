from functools import reduce
from typing import List, Optional, Sequence, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, None]


def make_rng(seed: SeedLike = None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, count: int) -> List[int]:
    """Independent per-task integer seeds derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def ginibre(d: int, rng: np.random.Generator, real: bool = False, cols: Optional[int] = None) -> np.ndarray:
    cols = d if cols is None else cols
    if real:
        return rng.standard_normal((d, cols))
    return (rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))) / np.sqrt(2)


def hermitian_part(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.conj().T) / 2


def random_hermitian(d: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    return hermitian_part(ginibre(d, rng, real=real))


def random_unitary(d: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """Haar-distributed unitary (orthogonal if ``real``) from a QR with phase correction."""
    q, r = np.linalg.qr(ginibre(d, rng, real=real))
    diag = np.diag(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def complete_frame(frame: np.ndarray) -> np.ndarray:
    """Extend orthonormal columns to a full orthonormal basis, keeping them first."""
    d, r = frame.shape
    if r == d:
        return frame.copy()
    q, _ = np.linalg.qr(frame, mode="complete")
    basis = q.astype(np.result_type(frame, q))
    basis[:, :r] = frame
    return basis


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, factors)


def random_frame(d: int, r: int, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """d×r matrix with Haar-distributed orthonormal columns."""
    return random_unitary(d, rng, real=real)[:, :r]
