"""
Standard-normal special functions used throughout the certification code.

All functions accept Python floats or numpy arrays and return the same shape
(a float for scalar input). Sigma-scaled CDFs are not provided separately:
callers evaluate ``std_normal_cdf(s / sigma)``.
"""
import math

import numpy as np
from scipy import special

from app.core.errors import ConfigurationError

SQRT_2PI = math.sqrt(2.0 * math.pi)
INV_SQRT_2PI = 1.0 / SQRT_2PI
SQRT_2 = math.sqrt(2.0)

# Acklam's rational approximation, lower region and central region
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _as_output(values: np.ndarray, like) -> float | np.ndarray:
    if np.ndim(like) == 0:
        return float(values)
    return values


def std_normal_pdf(s):
    """Density phi(s) = exp(-s^2 / 2) / sqrt(2 pi)"""
    x = np.asarray(s, dtype=float)
    return _as_output(INV_SQRT_2PI * np.exp(-0.5 * x * x), s)


def std_normal_cdf(s):
    """
    Standard normal CDF via the complementary error function.

    erfc keeps full relative accuracy in the lower tail; the upper tail is
    obtained through the same call with the sign flipped, so
    cdf(s) + cdf(-s) == 1 up to rounding.
    """
    x = np.asarray(s, dtype=float)
    return _as_output(0.5 * special.erfc(-x / SQRT_2), s)


def _lower_tail_quantile(q: np.ndarray) -> np.ndarray:
    """Quantile for 0 < q <= 1/2, rational start plus one Newton step"""
    z = np.empty_like(q)

    tail = q < _P_LOW
    if np.any(tail):
        r = np.sqrt(-2.0 * np.log(q[tail]))
        z[tail] = (((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]) / \
                  ((((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0)

    central = ~tail
    if np.any(central):
        u = q[central] - 0.5
        r = u * u
        z[central] = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u / \
                     (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)

    # Newton refinement; the rational start is good to ~1e-9 so one step reaches rounding level
    residual = 0.5 * special.erfc(-z / SQRT_2) - q
    z = z - residual / (INV_SQRT_2PI * np.exp(-0.5 * z * z))
    return z


def std_normal_quantile(p):
    """
    Inverse standard normal CDF.

    Raises ConfigurationError for p outside the open interval (0, 1); radius
    code handles the endpoints before calling.
    """
    x = np.asarray(p, dtype=float)
    if np.any(~((x > 0.0) & (x < 1.0))):
        raise ConfigurationError(f"quantile requires 0 < p < 1, got {p!r}")

    # 1 - p is exact for p >= 1/2, which makes quantile(1 - p) == -quantile(p)
    upper = x > 0.5
    q = np.where(upper, 1.0 - x, x)
    z = _lower_tail_quantile(np.atleast_1d(q)).reshape(q.shape)
    z = np.where(upper, -z, z)
    z = np.where(x == 0.5, 0.0, z)
    return _as_output(z, p)


def cdf_antiderivative(s):
    """A(s) = s * Phi(s) + phi(s), the antiderivative of Phi with A(-inf) = 0"""
    x = np.asarray(s, dtype=float)
    values = x * (0.5 * special.erfc(-x / SQRT_2)) + INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return _as_output(values, s)
