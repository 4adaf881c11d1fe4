from typing import Literal

from pydantic import BaseModel, Field

Procedure = Literal["bonferroni_c", "bonferroni_half", "cpm", "pearson_clopper_mono"]
Criterion = Literal["radius", "intervals"]
Verdict = Literal["covers", "undercovers", "inconclusive"]


class CoverageExperiment(BaseModel):
    """
    Monte Carlo coverage run. ``true_p=None`` asks for an adversarial search
    over the three-class simplex before the run.
    """
    true_p: list[float] | None = Field(default=None, min_length=2)
    n: int = Field(default=1000, ge=1)
    n0: int | None = Field(default=None, ge=1)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    procedure: Procedure = "bonferroni_c"
    criterion: Criterion = "radius"
    replications: int = Field(default=100_000, ge=1)
    seed: int = Field(default=0, ge=0)
    sigma: float = Field(default=1.0, gt=0.0)
