from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from app.config.lab_config import HERMITIAN_TOL, PROJECTION_TOL
from app.model.errors import (
    DimensionMismatchError,
    MalformedAlgebraError,
    NotAProjectionError,
)


class TraceMode(str, Enum):
    NORMALIZED = "normalized"
    UNNORMALIZED = "unnormalized"
    MIXED = "mixed"


@dataclass(frozen=True)
class TracialAlgebra:
    """
    Full matrix algebra M_d with a trace.

    ``weight`` is the trace of a rank-one projection: 1/d for the normalized
    trace, 1 for the usual trace, and the product of the factor weights for
    tensor products mixing both conventions.
    """

    dim: int
    trace_mode: TraceMode = TraceMode.NORMALIZED
    weight: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise MalformedAlgebraError(f"dimension must be a positive integer, got {self.dim}")
        mode = TraceMode(self.trace_mode)
        object.__setattr__(self, "trace_mode", mode)
        if self.weight is None:
            if mode is TraceMode.MIXED:
                raise MalformedAlgebraError("a mixed trace needs an explicit weight")
            weight = 1.0 / self.dim if mode is TraceMode.NORMALIZED else 1.0
            object.__setattr__(self, "weight", weight)
        elif self.weight <= 0:
            raise MalformedAlgebraError(f"trace weight must be positive, got {self.weight}")

    @classmethod
    def normalized(cls, dim: int) -> "TracialAlgebra":
        return cls(dim=dim, trace_mode=TraceMode.NORMALIZED)

    @classmethod
    def unnormalized(cls, dim: int) -> "TracialAlgebra":
        return cls(dim=dim, trace_mode=TraceMode.UNNORMALIZED)

    @property
    def identity_trace(self) -> float:
        return self.weight * self.dim


Scalar = Union[int, float, complex]


@dataclass(frozen=True, eq=False)
class Operator:
    """A dense complex d×d matrix living in a TracialAlgebra. Read-only."""

    entries: np.ndarray
    algebra: TracialAlgebra

    def __post_init__(self):
        matrix = np.array(self.entries, dtype=np.complex128)
        d = self.algebra.dim
        if matrix.shape != (d, d):
            raise DimensionMismatchError(
                f"entries of shape {matrix.shape} do not fit an algebra of dimension {d}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def adjoint(self) -> "Operator":
        return Operator(self.entries.conj().T, self.algebra)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.abs(self.entries - self.entries.conj().T).max(initial=0.0) <= tol)

    def is_real(self) -> bool:
        return bool(np.all(self.entries.imag == 0))

    def _check_partner(self, other: "Operator"):
        if other.dim != self.dim:
            raise DimensionMismatchError(
                f"operators of dimension {self.dim} and {other.dim} cannot be combined"
            )

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_partner(other)
        return Operator(self.entries @ other.entries, self.algebra)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_partner(other)
        return Operator(self.entries + other.entries, self.algebra)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_partner(other)
        return Operator(self.entries - other.entries, self.algebra)

    def __mul__(self, scalar: Scalar) -> "Operator":
        return Operator(self.entries * scalar, self.algebra)

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(-self.entries, self.algebra)

    def allclose(self, other: "Operator", atol: float = PROJECTION_TOL) -> bool:
        self._check_partner(other)
        return bool(np.abs(self.entries - other.entries).max(initial=0.0) <= atol)


@dataclass(frozen=True, eq=False)
class Projection:
    """
    Orthogonal projection e = e* = e² with spectrum certified in {0, 1}.

    Validation is entrywise within PROJECTION_TOL, and every eigenvalue must lie
    within PROJECTION_TOL of 0 or 1.
    """

    operator: Operator
    rank: int = field(init=False)

    def __post_init__(self):
        e = self.operator.entries
        if np.abs(e - e.conj().T).max(initial=0.0) > PROJECTION_TOL:
            raise NotAProjectionError("operator is not self-adjoint")
        if np.abs(e @ e - e).max(initial=0.0) > PROJECTION_TOL:
            raise NotAProjectionError("operator is not idempotent")
        spectrum = np.linalg.eigvalsh((e + e.conj().T) / 2)
        distance = np.minimum(np.abs(spectrum), np.abs(spectrum - 1.0))
        if distance.max(initial=0.0) > PROJECTION_TOL:
            raise NotAProjectionError("spectrum is not contained in {0, 1}")
        object.__setattr__(self, "rank", int(np.sum(spectrum > 0.5)))

    @classmethod
    def from_frame(cls, frame: np.ndarray, algebra: TracialAlgebra) -> "Projection":
        """Projection onto the span of the orthonormal columns of ``frame``."""
        frame = np.asarray(frame, dtype=np.complex128)
        if frame.ndim == 1:
            frame = frame[:, None]
        return cls(Operator(frame @ frame.conj().T, algebra))

    @classmethod
    def identity(cls, algebra: TracialAlgebra) -> "Projection":
        return cls(Operator(np.eye(algebra.dim), algebra))

    @classmethod
    def zero(cls, algebra: TracialAlgebra) -> "Projection":
        return cls(Operator(np.zeros((algebra.dim, algebra.dim)), algebra))

    @classmethod
    def diagonal(cls, mask, algebra: TracialAlgebra) -> "Projection":
        return cls(Operator(np.diag(np.asarray(mask, dtype=float)), algebra))

    @property
    def algebra(self) -> TracialAlgebra:
        return self.operator.algebra

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.entries

    @property
    def dim(self) -> int:
        return self.operator.dim

    @property
    def corank(self) -> int:
        return self.dim - self.rank

    @property
    def normalized_corank(self) -> float:
        return self.corank / self.dim

    def complement(self) -> "Projection":
        return Projection(Operator(np.eye(self.dim) - self.matrix, self.algebra))

    def is_diagonal(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.abs(off).max(initial=0.0) <= PROJECTION_TOL)
