"""Comparisons of the numerics against independent library oracles"""
import logging

import numpy as np
from scipy import special, stats

from app.models.reports import SelfCheckResult
from app.numerics.intervals import clopper_pearson_lower, clopper_pearson_upper
from app.numerics.lipschitz import constraint_value, solve_s0, verify_extremal
from app.numerics.pub_bound import spectral_norm_power_iteration
from app.numerics.stats_normal import std_normal_cdf, std_normal_quantile
from app.schemas.bounds import BinomialObservation

logger = logging.getLogger(__name__)

S0_GRID_P = np.linspace(0.001, 0.999, 21)
S0_GRID_L = (0.1, 1.0, 4.0, 20.0, 1e3, 1e6)


def check_quantile() -> SelfCheckResult:
    p = np.logspace(-10, np.log10(0.5), 200)
    p = np.concatenate([p, 1.0 - p])
    z = std_normal_quantile(p)
    round_trip = float(np.max(np.abs(std_normal_cdf(z) - p)))
    oracle = float(np.max(np.abs(z - special.ndtri(p)) / np.maximum(1.0, np.abs(z))))
    passed = round_trip <= 1e-13 and oracle <= 1e-9
    return SelfCheckResult(name="quantile", passed=passed,
                           detail=f"round trip {round_trip:.2e}, vs ndtri {oracle:.2e}")


def check_clopper_pearson(alpha: float = 0.001) -> SelfCheckResult:
    worst = 0.0
    for n in (10, 100, 1000, 10_000):
        for k in np.unique(np.linspace(1, n - 1, 25).astype(int)):
            obs = BinomialObservation(successes=int(k), trials=n)
            lower = clopper_pearson_lower(obs, alpha).value
            upper = clopper_pearson_upper(obs, alpha).value
            worst = max(worst,
                        abs(lower - stats.beta.ppf(alpha, k, n - k + 1)),
                        abs(upper - stats.beta.ppf(1.0 - alpha, k + 1, n - k)))
    return SelfCheckResult(name="clopper_pearson", passed=worst <= 1e-9, detail=f"max deviation from beta quantiles {worst:.2e}")


def check_s0_residuals() -> SelfCheckResult:
    worst = 0.0
    for L in S0_GRID_L:
        for p in S0_GRID_P:
            sol = solve_s0(float(p), L)
            worst = max(worst, abs(constraint_value(sol.s0, L) - p))
    return SelfCheckResult(name="s0_residuals", passed=worst <= 1e-12, detail=f"max residual {worst:.2e}")


def check_extremal(pairs: int = 20, seed: int = 0) -> SelfCheckResult:
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(pairs):
        p = float(rng.uniform(0.01, 0.99))
        L = float(10.0 ** rng.uniform(-1.0, 2.0))
        report = verify_extremal(solve_s0(p, L), L, p)
        failures += not report.passed
    return SelfCheckResult(name="extremal_identities", passed=failures == 0,
                           detail=f"{failures} of {pairs} random pairs failed")


def check_power_iteration(matrices: int = 10, seed: int = 0) -> SelfCheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(matrices):
        a = rng.standard_normal((40, 30))
        truth = np.linalg.svd(a, compute_uv=False)[0]
        estimate = spectral_norm_power_iteration(a).value
        worst = max(worst, abs(estimate - truth) / truth)
    return SelfCheckResult(name="power_iteration", passed=worst <= 1e-6, detail=f"max relative error {worst:.2e}")


CHECKS = (check_quantile, check_clopper_pearson, check_s0_residuals, check_extremal, check_power_iteration)


def run_selfcheck() -> list[SelfCheckResult]:
    results = []
    for check in CHECKS:
        result = check()
        log = logger.info if result.passed else logger.error
        log(f"selfcheck {result.name}: {'ok' if result.passed else 'FAILED'} ({result.detail})")
        results.append(result)
    return results
