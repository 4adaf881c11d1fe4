from typing import Literal

from pydantic import BaseModel, Field, model_validator

BoundSide = Literal["lower", "upper"]
BoundMethod = Literal["clopper_pearson", "hoeffding", "bernstein"]
RadiusKind = Literal["mono", "mult", "monoLip", "multLip"]


class BinomialObservation(BaseModel):
    """k successes out of n trials"""
    successes: int = Field(ge=0)
    trials: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_range(self) -> "BinomialObservation":
        if self.successes > self.trials:
            raise ValueError(f"successes ({self.successes}) exceed trials ({self.trials})")
        return self

    @property
    def proportion(self) -> float:
        return self.successes / self.trials


class ConfidenceBound(BaseModel):
    """One-sided bound on a binomial proportion at a stated risk"""
    value: float = Field(ge=0.0, le=1.0)
    side: BoundSide
    risk: float = Field(gt=0.0, lt=1.0)
    method: BoundMethod


class CertifiedRadius(BaseModel):
    """
    Certified l2 radius or an explicit abstention.

    ``fallback`` is set when a Lipschitz-adjusted radius could not be computed
    and the baseline radius was emitted instead.
    """
    kind: RadiusKind
    sigma: float = Field(gt=0.0)
    value: float | None = Field(default=None, ge=0.0)
    abstain: bool = False
    fallback: bool = False

    @model_validator(mode="after")
    def _check_variant(self) -> "CertifiedRadius":
        if self.abstain and self.value is not None:
            raise ValueError("an abstaining radius carries no value")
        if not self.abstain and self.value is None:
            raise ValueError("a certified radius needs a value")
        return self

    @classmethod
    def abstained(cls, kind: RadiusKind, sigma: float, fallback: bool = False) -> "CertifiedRadius":
        return cls(kind=kind, sigma=sigma, abstain=True, fallback=fallback)

    @classmethod
    def certified(cls, kind: RadiusKind, sigma: float, value: float, fallback: bool = False) -> "CertifiedRadius":
        return cls(kind=kind, sigma=sigma, value=value, fallback=fallback)

    def as_float(self) -> float:
        """Radius as a number for comparisons; abstain counts as 0"""
        return 0.0 if self.abstain else float(self.value)


class TopTwoProbabilities(BaseModel):
    """Top class probability p1 and runner-up p2"""
    p1: float = Field(ge=0.0, le=1.0)
    p2: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _check_order(self) -> "TopTwoProbabilities":
        if self.p1 < self.p2:
            raise ValueError(f"p1 ({self.p1}) must not be below p2 ({self.p2})")
        if self.p1 + self.p2 > 1.0 + 1e-12:
            raise ValueError(f"p1 + p2 = {self.p1 + self.p2} exceeds 1")
        return self
