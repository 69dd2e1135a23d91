from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import DimensionMismatchError


@dataclass(frozen=True, eq=False)
class MarkovOperator:
    """
    Linear map on the operators of one algebra, stored as a d²×d² matrix acting
    on row-major vectorized operators.
    """

    matrix: np.ndarray
    algebra: TracialAlgebra
    parameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.complex128)
        size = self.algebra.dim**2
        if matrix.shape != (size, size):
            raise DimensionMismatchError(
                f"map of shape {matrix.shape} does not act on M_{self.algebra.dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    def apply(self, x: Operator) -> Operator:
        if x.dim != self.dim:
            raise DimensionMismatchError(f"operator of dimension {x.dim} given to a map on M_{self.dim}")
        return Operator((self.matrix @ x.entries.reshape(-1)).reshape(self.dim, self.dim), self.algebra)

    __call__ = apply

    def compose(self, other: "MarkovOperator") -> "MarkovOperator":
        """self ∘ other."""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"maps on M_{self.dim} and M_{other.dim} cannot be composed")
        return MarkovOperator(self.matrix @ other.matrix, self.algebra, dict(self.parameters))


@dataclass(frozen=True)
class ErgodicAverage:
    """M_n(T)(x) = (1/n) Σ_{k<n} T^k x."""

    n: int
    value: Operator
