from pydantic import BaseModel, Field


class LipschitzSpec(BaseModel):
    """l2 Lipschitz constant L of a base soft-classifier component and the ball radius rho"""
    L: float = Field(gt=0.0)
    rho: float = Field(default=0.0, ge=0.0)


class SmoothedPoint(BaseModel):
    """Smoothed probability p at the evaluation point and the noise level"""
    p: float = Field(gt=0.0, lt=1.0)
    sigma: float = Field(gt=0.0)


class ExtremalSolution(BaseModel):
    """
    Breakpoints of the extremal L-Lipschitz function in unit-noise coordinates:
    0 below s0, slope L on (s0, s1), 1 above s1, with s1 = s0 + 1/L.
    """
    s0: float
    s1: float
    L: float = Field(gt=0.0)
    objective: float
    iterations: int = 0


class ExtremalReport(BaseModel):
    """Quadrature check of the extremal function's two integral identities"""
    mass: float
    mass_residual: float
    first_moment: float
    objective_residual: float
    passed: bool
    tolerance: float
    message: str | None = None
