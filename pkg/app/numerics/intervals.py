"""
One-sided confidence bounds on binomial proportions.

Clopper-Pearson bounds invert the exact binomial tail by bisection on p, with
the tail summed in log space so that n = 10^4 with extreme k does not
underflow. The k = 0 and k = n endpoints use closed forms.
"""
import logging
import math
from functools import lru_cache

import numpy as np
from scipy import special

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.schemas.bounds import BinomialObservation, BoundSide, ConfidenceBound

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"risk level must satisfy 0 < alpha < 1, got {alpha}")


def _check_counts(k: int, n: int) -> None:
    if n < 1:
        raise ConfigurationError(f"number of trials must be positive, got {n}")
    if not (0 <= k <= n):
        raise ConfigurationError(f"successes must lie in [0, {n}], got {k}")


@lru_cache(maxsize=64)
def _log_binomial_coefficients(n: int) -> np.ndarray:
    """log C(n, j) for j = 0..n"""
    j = np.arange(n + 1, dtype=float)
    coeffs = special.gammaln(n + 1.0) - special.gammaln(j + 1.0) - special.gammaln(n - j + 1.0)
    coeffs.setflags(write=False)
    return coeffs


def _log_tail(n: int, p: float, start: int, stop: int) -> float:
    """log sum_{j=start}^{stop} C(n,j) p^j (1-p)^(n-j)"""
    j = np.arange(start, stop + 1, dtype=float)
    terms = _log_binomial_coefficients(n)[start:stop + 1] + j * math.log(p) + (n - j) * math.log1p(-p)
    return float(special.logsumexp(terms))


def _bisect(predicate_high, tolerance: float) -> tuple[float, float]:
    """Shrink [0, 1] around the switch point of a monotone predicate (True above the root)"""
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if predicate_high(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


@lru_cache(maxsize=200_000)
def _cp_lower(k: int, n: int, alpha: float, tolerance: float) -> float:
    if k == 0:
        return 0.0
    if k == n:
        return alpha ** (1.0 / n)
    if n > settings.CP_MAX_TRIALS:
        return float(special.betaincinv(k, n - k + 1, alpha))

    log_alpha = math.log(alpha)
    # P(X >= k | p) increases with p
    lo, _ = _bisect(lambda p: _log_tail(n, p, k, n) >= log_alpha, tolerance)
    return lo


@lru_cache(maxsize=200_000)
def _cp_upper(k: int, n: int, alpha: float, tolerance: float) -> float:
    if k == n:
        return 1.0
    if k == 0:
        return 1.0 - alpha ** (1.0 / n)
    if n > settings.CP_MAX_TRIALS:
        return float(special.betaincinv(k + 1, n - k, 1.0 - alpha))

    log_alpha = math.log(alpha)
    # P(X <= k | p) decreases with p
    _, hi = _bisect(lambda p: _log_tail(n, p, 0, k) <= log_alpha, tolerance)
    return hi


def clopper_pearson_lower(obs: BinomialObservation, alpha: float, tolerance: float | None = None) -> ConfidenceBound:
    """
    Exact one-sided lower bound: the p at which P(X >= k | p) = alpha.

    The returned value is the lower end of the final bisection bracket, so it
    never exceeds the exact bound.
    """
    _check_alpha(alpha)
    _check_counts(obs.successes, obs.trials)
    tol = tolerance if tolerance is not None else settings.CP_TOLERANCE
    value = _cp_lower(obs.successes, obs.trials, float(alpha), tol)
    return ConfidenceBound(value=value, side="lower", risk=alpha, method="clopper_pearson")


def clopper_pearson_upper(obs: BinomialObservation, alpha: float, tolerance: float | None = None) -> ConfidenceBound:
    """Exact one-sided upper bound: the p at which P(X <= k | p) = alpha"""
    _check_alpha(alpha)
    _check_counts(obs.successes, obs.trials)
    tol = tolerance if tolerance is not None else settings.CP_TOLERANCE
    value = _cp_upper(obs.successes, obs.trials, float(alpha), tol)
    return ConfidenceBound(value=value, side="upper", risk=alpha, method="clopper_pearson")


def clopper_pearson_interval(obs: BinomialObservation, alpha: float) -> tuple[ConfidenceBound, ConfidenceBound]:
    """Two-sided interval at total risk alpha, alpha/2 on each side"""
    return clopper_pearson_lower(obs, alpha / 2.0), clopper_pearson_upper(obs, alpha / 2.0)


def clopper_pearson_lower_values(successes: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Vectorized lower bounds for an array of success counts sharing n and alpha"""
    _check_alpha(alpha)
    ks = np.asarray(successes, dtype=np.int64)
    unique, inverse = np.unique(ks, return_inverse=True)
    table = np.array([_cp_lower(int(k), n, float(alpha), settings.CP_TOLERANCE) for k in unique])
    return table[inverse].reshape(ks.shape)


def clopper_pearson_upper_values(successes: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Vectorized upper bounds for an array of success counts sharing n and alpha"""
    _check_alpha(alpha)
    ks = np.asarray(successes, dtype=np.int64)
    unique, inverse = np.unique(ks, return_inverse=True)
    table = np.array([_cp_upper(int(k), n, float(alpha), settings.CP_TOLERANCE) for k in unique])
    return table[inverse].reshape(ks.shape)


def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _apply_side(mean: float, width: float, side: BoundSide) -> float:
    return _clamp(mean - width if side == "lower" else mean + width)


def hoeffding_bound(mean: float, n: int, alpha: float, side: BoundSide) -> ConfidenceBound:
    """mean -/+ sqrt(ln(1/alpha) / (2n)), clamped to [0, 1]"""
    _check_alpha(alpha)
    if not (0.0 <= mean <= 1.0):
        raise ConfigurationError(f"mean must lie in [0, 1], got {mean}")
    if n < 1:
        raise ConfigurationError(f"sample size must be positive, got {n}")
    width = math.sqrt(math.log(1.0 / alpha) / (2.0 * n))
    return ConfidenceBound(value=_apply_side(mean, width, side), side=side, risk=alpha, method="hoeffding")


def empirical_bernstein_bound(mean: float, sample_variance: float, n: int, alpha: float,
                              side: BoundSide) -> ConfidenceBound:
    """
    Empirical Bernstein bound for [0, 1]-valued samples:
    mean -/+ (sqrt(2 V ln(2/alpha) / n) + 7 ln(2/alpha) / (3 (n - 1))).
    """
    _check_alpha(alpha)
    if n < 2:
        raise ConfigurationError(f"empirical Bernstein bound needs n >= 2, got {n}")
    if sample_variance < 0:
        raise ConfigurationError(f"sample variance must be nonnegative, got {sample_variance}")
    if not (0.0 <= mean <= 1.0):
        raise ConfigurationError(f"mean must lie in [0, 1], got {mean}")
    log_term = math.log(2.0 / alpha)
    width = math.sqrt(2.0 * sample_variance * log_term / n) + 7.0 * log_term / (3.0 * (n - 1))
    return ConfidenceBound(value=_apply_side(mean, width, side), side=side, risk=alpha, method="bernstein")
