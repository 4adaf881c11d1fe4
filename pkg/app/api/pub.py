import logging

from fastapi import APIRouter, HTTPException

from app.models.reports import PubReport
from app.numerics.pub_bound import pub
from app.schemas.layers import LayerSpec

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post("", response_model=PubReport)
async def compute_pub(layers: list[LayerSpec]):
    """Product upper bound of a layer chain"""
    try:
        result = pub(layers)
        logger.info(f"PUB over {len(result.per_layer)} layers: log_pub={result.log_pub:.4f}")
        return PubReport.from_result(result)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.error(f"Error computing PUB: {str(e)}")
        raise HTTPException(status_code=500, detail=f"Error computing PUB: {str(e)}")
