import math
from typing import Annotated

from pydantic import BaseModel, Field, model_validator

from app.schemas.coverage import Criterion, Procedure, Verdict
from app.schemas.layers import LayerBound, PubResult


class CertificateRow(BaseModel):
    """One certified input; ``radius`` is None when abstaining or on error"""
    input_id: str
    method: str
    model_tag: str | None = None
    sigma: float
    alpha: float
    n: int | None = None
    c_star: int | None = None
    i1: int | None = None
    lower_p1: float | None = None
    max_upper: float | None = None
    radius: float | None = None
    abstain: bool = False
    error: str | None = None


class CurveRow(BaseModel):
    """Radii at one p1 of the radius-versus-p1 table; None marks an abstention"""
    p1: float
    p2: float
    r_mono: float | None
    r_mult: float | None
    r_mono_lip: float | None
    r_mult_lip: float | None
    fallback: bool = False


class CoverageReport(BaseModel):
    """Failure rate of a procedure against 1 - alpha with its Monte Carlo standard error"""
    procedure: Procedure
    criterion: Criterion
    true_p: list[float]
    n: int
    n0: int | None = None
    alpha: float
    replications: int
    failures: int
    failure_rate: float
    mc_stderr: float
    theoretical_floor: float
    verdict: Verdict
    searched: bool = False


class SelfCheckResult(BaseModel):
    name: str
    passed: bool
    detail: str


Risk = Annotated[float, Field(ge=0.0, lt=1.0)]
Noise = Annotated[float, Field(ge=0.0)]
RoundSize = Annotated[int, Field(ge=0)]
Seed = Annotated[int, Field(ge=0)]


class RunManifest(BaseModel):
    """
    Provenance echoed as the first line of every CSV the CLI writes.

    Every configuration field is required. A field holds a list when the run
    mixes several values (one per experiment, or per record size). Zero means
    the quantity does not enter the computation, e.g. n0 for a run without a
    selection round or alpha for radii at exact probabilities.
    """
    command: str
    version: str
    alpha: Risk | list[Risk]
    sigma: Noise | list[Noise]
    n0: RoundSize | list[RoundSize]
    n: RoundSize | list[RoundSize]
    seed: Seed | list[Seed]
    method: str | list[str]
    inputs: dict[str, str] = {}

    @model_validator(mode="after")
    def _check_echo(self) -> "RunManifest":
        for name in ("alpha", "sigma", "n0", "n", "seed", "method"):
            if getattr(self, name) == []:
                raise ValueError(f"manifest field {name!r} is empty")
        return self


class PubReport(BaseModel):
    """PUB with its per-layer breakdown; ``pub`` is None when exp(log_pub) overflows"""
    log_pub: float
    pub: float | None
    converged: bool
    layers: int
    per_layer: list[LayerBound]

    @classmethod
    def from_result(cls, result: PubResult) -> "PubReport":
        value = result.pub
        return cls(
            log_pub=result.log_pub,
            pub=value if math.isfinite(value) else None,
            converged=result.converged,
            layers=len(result.per_layer),
            per_layer=result.per_layer,
        )
