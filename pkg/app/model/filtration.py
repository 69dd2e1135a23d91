from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from math import prod
from typing import Callable, Tuple

import numpy as np
from scipy.linalg import block_diag

from app.config.lab_config import DIM_CAP
from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import (
    DimensionCapError,
    LevelOutOfRangeError,
    MalformedAlgebraError,
    MissingSlotError,
)
from app.util.linalg import ginibre, kron_all


@dataclass(frozen=True)
class FactorFiltrationLevel:
    """Level n of the filtration M_n ⊕ ℓ_∞^{N−n} inside M_N (1 ≤ n ≤ N)."""

    ambient: int
    level: int

    def __post_init__(self):
        if self.ambient < 1:
            raise MalformedAlgebraError(f"factor side length must be positive, got {self.ambient}")
        if not 1 <= self.level <= self.ambient:
            raise LevelOutOfRangeError(f"level {self.level} outside 1..{self.ambient}")


class FiltrationKind(str, Enum):
    FACTOR = "factor"
    BIG = "big"


@dataclass(frozen=True)
class Filtration:
    """
    Finite filtration descriptor: levels 0..top, each with its conditional
    expectation ``expectation(level, X)``.
    """

    kind: FiltrationKind
    top: int
    algebra: TracialAlgebra
    expectation: Callable[[int, Operator], Operator] = field(repr=False)

    def check_level(self, level: int) -> int:
        if not 0 <= level <= self.top:
            raise LevelOutOfRangeError(f"level {level} outside 0..{self.top}")
        return level

    def level_map(self, level: int) -> Callable[[Operator], Operator]:
        return partial(self.expectation, self.check_level(level))

    @property
    def levels(self) -> range:
        return range(self.top + 1)


@dataclass(frozen=True)
class TruncatedBigAlgebra:
    """
    Finite truncation of L_∞({±1}^ℕ) ⊗ (⊗_k M_{N_k}) with ``sign_count`` retained
    sign coordinates, each a 2-dimensional diagonal slot. Slots are ordered sign
    coordinates first, then the factors in the given order; the trace is the
    normalized trace of the whole matrix algebra.
    """

    sign_count: int
    factors: Tuple[int, ...]
    dim_cap: int = DIM_CAP
    algebra: TracialAlgebra = field(init=False, repr=False)

    def __post_init__(self):
        factors = tuple(int(n) for n in self.factors)
        if self.sign_count < 0:
            raise MalformedAlgebraError(f"negative sign count {self.sign_count}")
        if not factors or any(n < 1 for n in factors):
            raise MalformedAlgebraError(f"factor sizes must be positive, got {self.factors}")
        object.__setattr__(self, "factors", factors)
        dim = 2**self.sign_count * prod(factors)
        if dim > self.dim_cap:
            raise DimensionCapError(f"truncated algebra of dimension {dim} exceeds the cap {self.dim_cap}")
        object.__setattr__(self, "algebra", TracialAlgebra.normalized(dim))

    @property
    def slot_dims(self) -> Tuple[int, ...]:
        return (2,) * self.sign_count + self.factors

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def factor_block(self) -> int:
        return prod(self.factors)

    @property
    def max_factor(self) -> int:
        return max(self.factors)

    def sign_slot(self, k: int) -> int:
        """Slot index of the k-th sign coordinate (1-based)."""
        if not 1 <= k <= self.sign_count:
            raise MissingSlotError(f"sign coordinate {k} is not retained (have {self.sign_count})")
        return k - 1

    def factor_slot(self, size: int, occurrence: int = 0) -> int:
        """Slot index of the factor M_size (first occurrence by default)."""
        positions = [i for i, n in enumerate(self.factors) if n == size]
        if len(positions) <= occurrence:
            raise MissingSlotError(f"no factor of size {size} in {self.factors}")
        return self.sign_count + positions[occurrence]

    def embed(self, slot: int, matrix: np.ndarray) -> Operator:
        """Place ``matrix`` on one slot, identity everywhere else."""
        dims = self.slot_dims
        if not 0 <= slot < len(dims):
            raise MissingSlotError(f"slot {slot} outside 0..{len(dims) - 1}")
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.shape != (dims[slot], dims[slot]):
            raise MalformedAlgebraError(f"matrix of shape {matrix.shape} does not fit slot {slot} of size {dims[slot]}")
        factors = [np.eye(n) for n in dims]
        factors[slot] = matrix
        return Operator(kron_all(factors), self.algebra)

    def sign_operator(self, k: int) -> Operator:
        """ε_k as the diagonal diag(1, −1) on the k-th sign slot."""
        return self.embed(self.sign_slot(k), np.diag([1.0, -1.0]))

    def random_element(self, rng: np.random.Generator, real: bool = False) -> Operator:
        """Random element whose sign component is diagonal, as elements of L_∞ ⊗ M are."""
        blocks = [ginibre(self.factor_block, rng, real=real) for _ in range(2**self.sign_count)]
        return Operator(block_diag(*blocks), self.algebra)

    def as_tensor(self, X: Operator) -> np.ndarray:
        return X.entries.reshape(self.slot_dims * 2)

    def from_tensor(self, tensor: np.ndarray) -> Operator:
        return Operator(tensor.reshape(self.dim, self.dim), self.algebra)
