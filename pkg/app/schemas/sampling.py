from pydantic import BaseModel, Field

from app.core.config import settings


class SamplingConfig(BaseModel):
    """Sizes, noise level and seed of one certification run"""
    n0: int = Field(ge=1)
    n: int = Field(ge=1)
    sigma: float = Field(gt=0.0)
    seed: int = Field(ge=0, lt=2**64)
    batch: int = Field(ge=1)

    @classmethod
    def from_settings(cls, **overrides) -> "SamplingConfig":
        """Defaults from settings; ``None`` overrides are ignored"""
        values = dict(
            n0=settings.N0,
            n=settings.N,
            sigma=settings.SIGMA,
            seed=settings.SEED,
            batch=settings.BATCH,
        )
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)
