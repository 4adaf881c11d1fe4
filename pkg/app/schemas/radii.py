from pydantic import BaseModel, Field

from app.schemas.bounds import CertifiedRadius


class RadiiRequest(BaseModel):
    """Top-two smoothed probabilities, noise level and base-classifier Lipschitz constant"""
    p1: float = Field(gt=0.0, lt=1.0)
    p2: float = Field(gt=0.0, lt=1.0)
    sigma: float = Field(gt=0.0)
    L: float = Field(gt=0.0)
    rho: float = Field(default=0.0, ge=0.0)


class RadiiResponse(BaseModel):
    r_mono: CertifiedRadius
    r_mult: CertifiedRadius
    r_mono_lip: CertifiedRadius
    r_mult_lip: CertifiedRadius
    lipschitz_constant: float
