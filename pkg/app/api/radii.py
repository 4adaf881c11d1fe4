import logging

from fastapi import APIRouter, HTTPException, Query

from app.core.errors import SolverError
from app.models.reports import CurveRow
from app.numerics.lipschitz import radius_mono_lip, radius_mult_lip, smoothed_lipschitz_constant
from app.numerics.radii import radius_mono, radius_mult
from app.schemas.bounds import TopTwoProbabilities
from app.schemas.lipschitz import LipschitzSpec, SmoothedPoint
from app.schemas.radii import RadiiRequest, RadiiResponse
from app.services.curves import radius_curves

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("", response_model=RadiiResponse)
async def compute_radii(request: RadiiRequest):
    """Baseline and Lipschitz-adjusted radii at one (p1, p2)"""
    try:
        top_two = TopTwoProbabilities(p1=request.p1, p2=request.p2)
        spec = LipschitzSpec(L=request.L, rho=request.rho)
        return RadiiResponse(
            r_mono=radius_mono(top_two.p1, request.sigma),
            r_mult=radius_mult(top_two, request.sigma),
            r_mono_lip=radius_mono_lip(top_two.p1, spec, request.sigma),
            r_mult_lip=radius_mult_lip(top_two, spec, spec, request.sigma),
            lipschitz_constant=smoothed_lipschitz_constant(SmoothedPoint(p=top_two.p1, sigma=request.sigma), spec),
        )
    except SolverError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing radii at p1={request.p1}, p2={request.p2}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error computing radii: {str(e)}")


@router.get("/curves", response_model=list[CurveRow])
async def get_curves(
    L: float = Query(default=4.0, gt=0.0),
    sigma: float = Query(default=0.12, gt=0.0),
    p2: float = Query(default=0.1, gt=0.0, lt=1.0),
    points: int = Query(default=100, ge=2, le=10_000),
    p1_min: float = Query(default=0.11, gt=0.0, lt=1.0),
    p1_max: float = Query(default=0.999, gt=0.0, lt=1.0),
):
    """Radius-versus-p1 table"""
    try:
        return radius_curves(L=L, sigma=sigma, p2=p2, points=points, p1_min=p1_min, p1_max=p1_max)
    except SolverError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing curves for L={L}, sigma={sigma}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error computing curves: {str(e)}")
