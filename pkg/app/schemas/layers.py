import math
from typing import Annotated, Literal

from pydantic import BaseModel, Field, model_validator

_LOG_FLOAT_MAX = math.log(1.7976931348623157e308)


class DenseLayer(BaseModel):
    """
    Linear layer given either as an explicit (out x in) matrix or as a
    precomputed spectral norm. Convolutions are supplied the same way.
    """
    kind: Literal["dense"] = "dense"
    matrix: list[list[float]] | None = None
    norm: float | None = Field(default=None, gt=0.0)
    repeat: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_operator(self) -> "DenseLayer":
        if (self.matrix is None) == (self.norm is None):
            raise ValueError("dense layer needs exactly one of 'matrix' or 'norm'")
        if self.matrix is not None:
            if not self.matrix or not self.matrix[0]:
                raise ValueError("dense matrix must be nonempty")
            width = len(self.matrix[0])
            if any(len(row) != width for row in self.matrix):
                raise ValueError("dense matrix rows must all have the same length")
            if not all(math.isfinite(v) for row in self.matrix for v in row):
                raise ValueError("dense matrix entries must be finite")
        return self

    @property
    def shape(self) -> tuple[int, int] | None:
        if self.matrix is None:
            return None
        return len(self.matrix), len(self.matrix[0])


class BatchNormLayer(BaseModel):
    """Inference-mode batch normalization; only the scale part matters for the bound"""
    kind: Literal["batchnorm"] = "batchnorm"
    gamma: list[float] = Field(min_length=1)
    running_var: list[float] = Field(min_length=1)
    eps: float = Field(default=1e-5, gt=0.0)
    repeat: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_vectors(self) -> "BatchNormLayer":
        if len(self.gamma) != len(self.running_var):
            raise ValueError(
                f"gamma ({len(self.gamma)}) and running_var ({len(self.running_var)}) lengths differ"
            )
        if any(v < 0 for v in self.running_var):
            raise ValueError("running_var entries must be nonnegative")
        return self


class PoolingLayer(BaseModel):
    kind: Literal["pooling"] = "pooling"
    repeat: int = Field(default=1, ge=1)


class ActivationLayer(BaseModel):
    """1-Lipschitz activation (ReLU, GroupSort, ...)"""
    kind: Literal["activation"] = "activation"
    repeat: int = Field(default=1, ge=1)


class ResidualLayer(BaseModel):
    """x + main(x)"""
    kind: Literal["residual"] = "residual"
    main: list["LayerSpec"] = Field(min_length=1)
    repeat: int = Field(default=1, ge=1)


LayerSpec = Annotated[
    DenseLayer | BatchNormLayer | PoolingLayer | ActivationLayer | ResidualLayer,
    Field(discriminator="kind"),
]

ResidualLayer.model_rebuild()


class SpectralNormEstimate(BaseModel):
    """Largest singular value from power iteration"""
    value: float = Field(ge=0.0)
    iterations: int
    converged: bool


class LayerBound(BaseModel):
    """Per-layer bound; ``lipschitz`` is None when exp(log_lipschitz) overflows a float"""
    index: int
    kind: str
    log_lipschitz: float
    lipschitz: float | None
    converged: bool = True

    @classmethod
    def from_log(cls, index: int, kind: str, log_lipschitz: float, converged: bool = True) -> "LayerBound":
        lipschitz = None if log_lipschitz > _LOG_FLOAT_MAX else math.exp(log_lipschitz)
        return cls(index=index, kind=kind, log_lipschitz=log_lipschitz, lipschitz=lipschitz, converged=converged)


class PubResult(BaseModel):
    """Product upper bound kept in log space; ``log_pub`` is the sum of per-layer logs"""
    log_pub: float
    per_layer: list[LayerBound]

    @property
    def converged(self) -> bool:
        return all(layer.converged for layer in self.per_layer)

    @property
    def pub(self) -> float:
        """exp(log_pub), or inf when that overflows a float"""
        if self.log_pub > _LOG_FLOAT_MAX:
            return math.inf
        return math.exp(self.log_pub)
