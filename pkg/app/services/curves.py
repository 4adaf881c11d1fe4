import logging

import numpy as np

from app.core.errors import ConfigurationError
from app.models.reports import CurveRow
from app.numerics.lipschitz import radius_mono_lip, radius_mult_lip
from app.numerics.radii import check_sigma, radius_mono, radius_mult
from app.schemas.bounds import CertifiedRadius, TopTwoProbabilities
from app.schemas.lipschitz import LipschitzSpec

logger = logging.getLogger(__name__)


def _value(radius: CertifiedRadius) -> float | None:
    return None if radius.abstain else radius.value


def radius_curves(L: float = 4.0, sigma: float = 0.12, p2: float = 0.1, points: int = 100,
                  p1_min: float = 0.11, p1_max: float = 0.999, fallback: bool | None = None) -> list[CurveRow]:
    """
    R_mono, R_mult, R_monoLip and R_multLip on an even p1 grid with a fixed
    runner-up p2 and one Lipschitz constant shared by both classes.

    Where p1 + p2 would exceed 1 the runner-up is lowered to 1 - p1, the
    largest value it can take.
    """
    check_sigma(sigma)
    if points < 2:
        raise ConfigurationError(f"need at least 2 grid points, got {points}")
    if not (0.0 < p1_min < p1_max < 1.0):
        raise ConfigurationError(f"p1 range must satisfy 0 < p1_min < p1_max < 1, got [{p1_min}, {p1_max}]")
    if not (0.0 < p2 < 1.0):
        raise ConfigurationError(f"p2 must lie in (0, 1), got {p2}")
    spec = LipschitzSpec(L=L)

    rows = []
    for p1 in np.linspace(p1_min, p1_max, points):
        p1 = float(p1)
        runner_up = min(p2, 1.0 - p1)
        mono = radius_mono(p1, sigma)
        mono_lip = radius_mono_lip(p1, spec, sigma, fallback=fallback)
        if p1 > runner_up:
            top_two = TopTwoProbabilities(p1=p1, p2=runner_up)
            mult = radius_mult(top_two, sigma)
            mult_lip = radius_mult_lip(top_two, spec, spec, sigma, fallback=fallback)
        else:
            mult = CertifiedRadius.abstained("mult", sigma)
            mult_lip = CertifiedRadius.abstained("multLip", sigma)

        rows.append(CurveRow(
            p1=p1,
            p2=runner_up,
            r_mono=_value(mono),
            r_mult=_value(mult),
            r_mono_lip=_value(mono_lip),
            r_mult_lip=_value(mult_lip),
            fallback=mono_lip.fallback or mult_lip.fallback,
        ))
    logger.info(f"Computed {len(rows)} curve rows for L={L}, sigma={sigma}, p2={p2}")
    return rows
