import math
from typing import Union

from pydantic import BaseModel, ConfigDict, field_validator


class PExponent(BaseModel):
    """Exponent p of a Schatten (quasi-)norm, 0 < p ≤ ∞."""

    model_config = ConfigDict(frozen=True)

    p: float

    @field_validator("p")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if math.isnan(v) or v <= 0:
            raise ValueError("exponent must be positive")
        return v

    @classmethod
    def of(cls, value: Union["PExponent", float, int]) -> "PExponent":
        if isinstance(value, PExponent):
            return value
        return cls(p=float(value))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.p)

    @property
    def is_quasi_norm(self) -> bool:
        return self.p < 1

    @property
    def is_chain_admissible(self) -> bool:
        # the chain lemma works with the 2p-norm, so it needs p < 1/2
        return self.p < 0.5

    @property
    def reciprocal(self) -> float:
        return 0.0 if self.is_infinite else 1.0 / self.p


ExponentLike = Union[PExponent, float, int]
