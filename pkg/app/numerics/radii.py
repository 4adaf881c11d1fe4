"""
Baseline certified radii R_mono and R_mult and the plug-in radius built from
confidence bounds.
"""
import math

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.numerics.stats_normal import std_normal_quantile
from app.schemas.bounds import CertifiedRadius, ConfidenceBound, RadiusKind, TopTwoProbabilities

# Clamp used only on raw empirical proportions before inverting Phi
PROPORTION_EPS = 1e-16


def check_sigma(sigma: float) -> None:
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ConfigurationError(f"sigma must be a positive finite number, got {sigma}")


def extended_quantile(p: float) -> float:
    """Phi^-1 with Phi^-1(0) = -inf and Phi^-1(1) = +inf"""
    if p <= 0.0:
        return -math.inf
    if p >= 1.0:
        return math.inf
    return std_normal_quantile(p)


def clamp_proportion(p: float) -> float:
    return min(1.0 - PROPORTION_EPS, max(PROPORTION_EPS, p))


def finalize_radius(kind: RadiusKind, sigma: float, value: float, cap_factor: float | None = None,
                    fallback: bool = False) -> CertifiedRadius:
    """Abstain on a nonpositive value, otherwise cap at cap_factor * sigma"""
    if not value > 0.0:
        return CertifiedRadius.abstained(kind, sigma, fallback=fallback)
    cap = (cap_factor if cap_factor is not None else settings.RADIUS_CAP_FACTOR) * sigma
    return CertifiedRadius.certified(kind, sigma, min(value, cap), fallback=fallback)


def radius_mono(p1: float, sigma: float, clamp_proportions: bool = False,
                cap_factor: float | None = None) -> CertifiedRadius:
    """R_mono = sigma * Phi^-1(p1); abstain when p1 <= 1/2"""
    check_sigma(sigma)
    if not (0.0 <= p1 <= 1.0):
        raise ConfigurationError(f"p1 must lie in [0, 1], got {p1}")
    if p1 <= 0.5:
        return CertifiedRadius.abstained("mono", sigma)
    if clamp_proportions:
        p1 = clamp_proportion(p1)
    return finalize_radius("mono", sigma, sigma * extended_quantile(p1), cap_factor)


def mult_value(p1: float, p2: float, sigma: float) -> float:
    """(sigma / 2) (Phi^-1(p1) - Phi^-1(p2)) allowing infinite quantiles"""
    if p1 <= p2:
        return 0.0
    return 0.5 * sigma * (extended_quantile(p1) - extended_quantile(p2))


def radius_mult(p: TopTwoProbabilities, sigma: float, clamp_proportions: bool = False,
                cap_factor: float | None = None) -> CertifiedRadius:
    """R_mult = (sigma / 2) (Phi^-1(p1) - Phi^-1(p2)); abstain when p1 <= p2"""
    check_sigma(sigma)
    p1, p2 = p.p1, p.p2
    if p1 <= p2:
        return CertifiedRadius.abstained("mult", sigma)
    if clamp_proportions:
        p1, p2 = clamp_proportion(p1), clamp_proportion(p2)
    return finalize_radius("mult", sigma, mult_value(p1, p2, sigma), cap_factor)


def plugin_radius_mult(lower_p1: ConfidenceBound, upper_p2: ConfidenceBound, sigma: float,
                       cap_factor: float | None = None) -> CertifiedRadius:
    """
    R_mult evaluated at (lower bound of p1, upper bound of p2).

    Phi^-1 is increasing, so on the event that both bounds hold this never
    exceeds the true R_mult.
    """
    check_sigma(sigma)
    if lower_p1.side != "lower" or upper_p2.side != "upper":
        raise ConfigurationError("plug-in radius needs a lower bound for p1 and an upper bound for p2")
    return finalize_radius("mult", sigma, mult_value(lower_p1.value, upper_p2.value, sigma), cap_factor)


def mult_radius_values(lower: np.ndarray, upper: np.ndarray, sigma: float) -> np.ndarray:
    """
    Vectorized plug-in R_mult for simulation; abstentions are NaN so that any
    comparison against them is False.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        margin = _quantile_array(lo) - _quantile_array(hi)
    radius = 0.5 * sigma * np.minimum(margin, 2.0 * settings.RADIUS_CAP_FACTOR)
    return np.where((lo > hi) & (radius > 0), radius, np.nan)


def mono_radius_values(lower: np.ndarray, sigma: float) -> np.ndarray:
    """Vectorized R_mono of lower bounds; abstentions (bound <= 1/2) are NaN"""
    lo = np.asarray(lower, dtype=float)
    radius = sigma * np.minimum(_quantile_array(lo), settings.RADIUS_CAP_FACTOR)
    return np.where(lo > 0.5, radius, np.nan)


def _quantile_array(p: np.ndarray) -> np.ndarray:
    out = np.empty_like(p, dtype=float)
    out[p <= 0.0] = -np.inf
    out[p >= 1.0] = np.inf
    interior = (p > 0.0) & (p < 1.0)
    if np.any(interior):
        out[interior] = std_normal_quantile(p[interior])
    return out
