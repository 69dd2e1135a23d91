from enum import Enum
from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config.lab_config import (
    DEFAULT_BUDGET,
    DEFAULT_CHAIN_N,
    DEFAULT_CHAIN_P,
    DEFAULT_CHAIN_T,
    DEFAULT_CHAIN_TRIALS,
    DEFAULT_DESCENTS,
    DEFAULT_ERGODIC_K_LIST,
    DEFAULT_ERGODIC_N_LIST,
    DEFAULT_ERGODIC_P,
    DEFAULT_ERGODIC_TRIALS,
    DEFAULT_MU_N_LIST,
    DEFAULT_MU_T,
    DEFAULT_OBSTRUCTION_N_MAX,
    DEFAULT_OBSTRUCTION_P_LIST,
    DEFAULT_OBSTRUCTION_T,
    DEFAULT_P_LIST,
    DEFAULT_SUBSEQUENCE_TOL,
    DEFAULT_TN_MAX,
    DIM_CAP,
)


class Command(str, Enum):
    TN_BOUNDS = "tn-bounds"
    MU = "mu"
    CHAIN = "chain"
    OBSTRUCTION = "obstruction"
    ERGODIC = "ergodic"


COMMAND_DEFAULTS: Dict[Command, Dict[str, Any]] = {
    Command.TN_BOUNDS: {"n_max": DEFAULT_TN_MAX, "p_list": DEFAULT_P_LIST},
    Command.MU: {"n_list": DEFAULT_MU_N_LIST, "p_list": [DEFAULT_CHAIN_P], "t": DEFAULT_MU_T},
    Command.CHAIN: {
        "n_list": [DEFAULT_CHAIN_N],
        "p_list": [DEFAULT_CHAIN_P],
        "t": DEFAULT_CHAIN_T,
        "trials": DEFAULT_CHAIN_TRIALS,
    },
    Command.OBSTRUCTION: {
        "p_list": DEFAULT_OBSTRUCTION_P_LIST,
        "t": DEFAULT_OBSTRUCTION_T,
        "n_max": DEFAULT_OBSTRUCTION_N_MAX,
    },
    Command.ERGODIC: {
        "n_list": DEFAULT_ERGODIC_N_LIST,
        "p_list": [DEFAULT_ERGODIC_P],
        "k_list": DEFAULT_ERGODIC_K_LIST,
        "trials": DEFAULT_ERGODIC_TRIALS,
    },
}


class ExperimentConfig(BaseModel):
    """
    Parameters of one experiment grid. Only the keys a command reads matter to
    it; the rest keep their defaults and are still echoed, so a result file
    always records the full parameter set it was produced with.
    """

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=True)

    command: Command
    n_list: List[int] = Field(default_factory=lambda: [DEFAULT_CHAIN_N])
    p_list: List[float] = Field(default_factory=lambda: [DEFAULT_CHAIN_P])
    t: float = Field(default=DEFAULT_CHAIN_T, gt=0, lt=1)
    budget: int = Field(default=DEFAULT_BUDGET, ge=1)
    descents: int = Field(default=DEFAULT_DESCENTS, ge=1)
    seed: int = Field(default=0, ge=0)
    trials: int = Field(default=1, ge=1)
    k_list: List[int] = Field(default_factory=lambda: list(DEFAULT_ERGODIC_K_LIST))
    n_max: int = Field(default=DEFAULT_TN_MAX, ge=1)
    chain_p: float = Field(default=DEFAULT_CHAIN_P, gt=0, lt=0.5)
    tol: float = Field(default=DEFAULT_SUBSEQUENCE_TOL, gt=0)
    dim_cap: int = Field(default=DIM_CAP, ge=1)

    @field_validator("n_list")
    @classmethod
    def _positive_sizes(cls, value: List[int]) -> List[int]:
        if not value or any(n < 1 for n in value):
            raise ValueError("sizes must be a non-empty list of positive integers")
        return value

    @field_validator("p_list")
    @classmethod
    def _positive_exponents(cls, value: List[float]) -> List[float]:
        if not value or any(p <= 0 for p in value):
            raise ValueError("exponents must be a non-empty list of positive numbers")
        return value

    @field_validator("k_list")
    @classmethod
    def _phase_bases(cls, value: List[int]) -> List[int]:
        if not value or any(k < 2 for k in value):
            raise ValueError("K values must be integers ≥ 2")
        return value

    @model_validator(mode="after")
    def _dimension_fits(self):
        if self.command in (Command.CHAIN.value, Command.MU.value):
            largest = max(self.n_list) ** 2 if self.command == Command.CHAIN.value else max(self.n_list)
            if largest > self.dim_cap:
                raise ValueError(f"dimension {largest} exceeds the cap {self.dim_cap}")
        return self

    @classmethod
    def for_command(cls, command: Command, **overrides) -> "ExperimentConfig":
        values = dict(COMMAND_DEFAULTS[Command(command)])
        values.update(overrides)
        return cls(command=command, **values)

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")
