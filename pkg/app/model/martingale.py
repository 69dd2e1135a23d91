from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from app.model.algebra import Operator, TracialAlgebra
from app.model.errors import DimensionMismatchError, MalformedAlgebraError
from app.model.filtration import Filtration


@dataclass(frozen=True)
class MartingaleSequence:
    """
    Ordered terms (Y_n) in one algebra. ``term_levels[k]`` is the filtration
    level term k is adapted to; without a filtration the sequence is just a
    family of operators (enough for μ evaluation).
    """

    ambient: TracialAlgebra
    terms: Tuple[Operator, ...]
    filtration: Optional[Filtration] = None
    term_levels: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise MalformedAlgebraError("a sequence needs at least one term")
        for term in terms:
            if term.dim != self.ambient.dim:
                raise DimensionMismatchError(
                    f"term of dimension {term.dim} in a sequence over M_{self.ambient.dim}"
                )
        object.__setattr__(self, "terms", terms)
        if self.term_levels is not None:
            levels = tuple(int(n) for n in self.term_levels)
            if len(levels) != len(terms):
                raise MalformedAlgebraError(f"{len(levels)} levels for {len(terms)} terms")
            if self.filtration is not None:
                for level in levels:
                    self.filtration.check_level(level)
            object.__setattr__(self, "term_levels", levels)

    @classmethod
    def of(cls, terms: Sequence[Operator]) -> "MartingaleSequence":
        terms = tuple(terms)
        if not terms:
            raise MalformedAlgebraError("a sequence needs at least one term")
        return cls(ambient=terms[0].algebra, terms=terms)

    @property
    def dim(self) -> int:
        return self.ambient.dim

    def __len__(self) -> int:
        return len(self.terms)

    def is_real(self) -> bool:
        return all(term.is_real() for term in self.terms)
