import logging

from fastapi import APIRouter, HTTPException, Query

from app.core.errors import SolverError
from app.models.reports import CertificateRow
from app.schemas.certificates import CertifyMethod
from app.schemas.counts import CountsRecord
from app.services.certification_service import CertificationService

logger = logging.getLogger(__name__)

router = APIRouter()
certification_service = CertificationService()


@router.post("/{method}", response_model=list[CertificateRow])
async def certify(
    method: CertifyMethod,
    records: list[CountsRecord],
    alpha: float | None = Query(default=None, gt=0.0, lt=1.0),
    sigma: float | None = Query(default=None, gt=0.0),
):
    """Certify counts records; records without sigma use the query value or the default"""
    try:
        return certification_service.certify_records(records, method, alpha=alpha, sigma=sigma)
    except SolverError as e:
        raise HTTPException(status_code=422, detail=str(e))
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error certifying {len(records)} records with {method}: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error certifying records: {str(e)}")
