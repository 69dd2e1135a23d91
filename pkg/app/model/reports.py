from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, InstanceOf, model_validator

from app.config.lab_config import PROJECTION_TOL
from app.model.algebra import Projection
from app.model.errors import InequalityViolationError


class CheckReport(BaseModel):
    """Base of every checker result: per-assertion booleans plus ``passed``."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    passed: bool

    def enforce(self, strict: bool):
        if strict and not self.passed:
            raise InequalityViolationError(f"{type(self).__name__} failed: {self.failures()}", self)
        return self

    def failures(self) -> List[str]:
        return [name for name, value in self if name.endswith("_ok") and value is False]


class AxiomCheck(BaseModel):
    name: str
    passed: bool
    worst: float
    witness_trial: Optional[int] = None


class CondExpReport(CheckReport):
    trials: int
    checks: List[AxiomCheck]

    def failures(self) -> List[str]:
        return [f"{c.name} (trial {c.witness_trial}, worst {c.worst:.3e})" for c in self.checks if not c.passed]

    def check(self, name: str) -> AxiomCheck:
        return next(c for c in self.checks if c.name == name)


class MartingaleReport(CheckReport):
    terms: int
    adaptedness_error: float
    martingale_error: float
    adapted_ok: bool
    martingale_ok: bool


class TnBoundsReport(CheckReport):
    n: int
    p: float
    lower: float
    computed: float
    upper: float
    lower_ok: bool
    upper_ok: bool
    shift_norm: float
    shift_identity_ok: bool


class VkRecursionReport(CheckReport):
    p: float
    kmax: int
    values: List[float]
    cap: float
    v0_ok: bool
    recursion_ok: bool
    cap_ok: bool


class ChainConstants(BaseModel):
    """Constants of the inequality chain for one exponent 0 < p < 1/2."""

    model_config = ConfigDict(frozen=True)

    p: float
    c_p: float = Field(gt=0)
    C_p: float = Field(gt=0)
    t_prime: float = Field(gt=0, lt=1)
    delta: float = Field(gt=0)


class CertifiedBound(BaseModel):
    t: float
    t_prime: float
    delta: float
    applies: bool

    def lower_bound(self, N: int) -> Optional[float]:
        """δ√N when the certificate applies."""
        return self.delta * N**0.5 if self.applies else None


class ChainReport(CheckReport):
    N: int
    p: float
    t: float
    corank: float
    m: float
    norm_A: float
    norm_B: float
    norm_C: float
    lower_A: float
    upper_B: float
    upper_C: float
    intermediate_upper_A: float
    decomposition_residual: float
    max_contraction: float
    certificate_applies: bool
    certified_m_lower: Optional[float] = None
    a_lower_ok: bool
    b_upper_ok: bool
    c_upper_ok: bool
    p_triangle_ok: bool
    certificate_ok: bool
    decomposition_ok: bool
    intermediate_ok: bool


class MuDirection(str, Enum):
    UPPER_BOUND = "upper_bound"
    CERTIFIED_LOWER_BOUND = "certified_lower_bound"


class MuMethod(str, Enum):
    DIAG_EXHAUSTIVE = "diag_exhaustive"
    GRASSMANN_SEARCH = "grassmann_search"
    SPECTRAL_HEURISTIC = "spectral_heuristic"
    ANALYTIC_CERTIFICATE = "analytic_certificate"


class MuEstimate(BaseModel):
    """One estimate of μ_t^c: an upper bound with its witness, or a certified lower bound."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float = Field(gt=0, lt=1)
    value: float = Field(ge=0)
    witness: Optional[InstanceOf[Projection]] = None
    direction: MuDirection
    method: MuMethod
    iterations: int = 0
    seed: Optional[int] = None

    @model_validator(mode="after")
    def validate_witness(self):
        if (self.witness is not None) != (self.direction is MuDirection.UPPER_BOUND):
            raise ValueError("a witness is required for upper bounds and forbidden otherwise")
        if self.witness is not None and self.witness.normalized_corank > self.t + PROJECTION_TOL:
            raise ValueError(
                f"witness corank {self.witness.normalized_corank} exceeds t = {self.t}"
            )
        return self


class GrowthRow(BaseModel):
    N: int
    certified_lower: Optional[float] = None
    searched: float
    diagonal: Optional[float] = None
    ordering_ok: bool


class GrowthReport(CheckReport):
    p: float
    t: float
    budget: int
    seed: int
    certificate_applies: bool
    rows: List[GrowthRow]
    slope: Optional[float] = None
    tail_slope: Optional[float] = None
    tail_sizes: List[int] = []
    ordering_ok: bool


class ObstructionReport(BaseModel):
    p: float
    t: float
    chain_p: float
    exponent: float
    delta: float
    t_prime: float
    n_max: int
    log_bounds: List[float]
    bounds: List[float]
    growth_onset: Optional[int] = None
    diverges: bool
    conclusion: str


class SubsequenceLevel(BaseModel):
    level: int
    m: int
    error: float
    reached: bool


class SubsequenceReport(CheckReport):
    p: float
    tol: float
    scan_cap: int
    levels: List[SubsequenceLevel]
    total_error: float
    total_ok: bool


class TruncationReport(CheckReport):
    t: float
    p: float
    threshold: float
    complements: List[float]
    markov_bounds: List[float]
    norms_after: List[float]
    meet_complement: float
    mu_value: float
    markov_ok: bool
    norm_ok: bool
    subadditive_ok: bool
    mu_ok: bool
    meet_ok: bool


class UnitaryApproxRow(BaseModel):
    K: int
    worst_lhs: float
    worst_rhs: float
    holds: bool


class UnitaryApproxReport(CheckReport):
    N: int
    p: float
    trials: int
    rows: List[UnitaryApproxRow]
    minimal_K: Optional[int] = None
    unitary_gap: Optional[float] = None
    gap_target: float
    phase_convention: str


class FlipIdentityReport(CheckReport):
    N: int
    p: float
    identity_error: float
    commute_levels: List[int]
    commute_errors: List[float]
    identity_ok: bool
    commute_ok: bool


class MarkovReport(CheckReport):
    trials: int
    unital_error: float
    trace_error: float
    min_eigenvalue: float
    unital_ok: bool
    trace_ok: bool
    positive_ok: bool
