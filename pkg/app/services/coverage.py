"""
Coverage of certification procedures under a known multinomial distribution.

A replication draws class counts from ``true_p``, runs the procedure and
records a failure when
  - criterion "radius": the emitted radius exceeds the true radius
    (abstentions never fail), or
  - criterion "intervals": some bound in the procedure's family misses its
    true parameter.
Bonferroni-type interval coverage is also available exactly, by summing the
multinomial pmf over every outcome.
"""
import logging
import math
from functools import lru_cache

import numpy as np
from scipy import special

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.models.reports import CoverageReport
from app.numerics.intervals import clopper_pearson_lower_values, clopper_pearson_upper_values
from app.numerics.radii import mono_radius_values, mult_radius_values, radius_mono, radius_mult
from app.numerics.simplex import as_simplex, top_two
from app.schemas.bounds import CertifiedRadius, RadiusKind, TopTwoProbabilities
from app.schemas.coverage import CoverageExperiment, Criterion, Procedure
from app.services.cpm import partition_indices

logger = logging.getLogger(__name__)

MAX_COMPOSITIONS = 2_000_000
_CHUNK = 20_000
_SEARCH_CLASSES = 3


def true_radius(true_p, kind: RadiusKind, sigma: float) -> CertifiedRadius:
    """R_mono or R_mult of the sorted true probabilities"""
    p1, p2 = top_two(as_simplex(true_p))
    if kind == "mono":
        return radius_mono(p1, sigma)
    if kind == "mult":
        return radius_mult(TopTwoProbabilities(p1=p1, p2=p2), sigma)
    raise ConfigurationError(f"true radius is defined for 'mono' and 'mult', got {kind!r}")


def _generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _bonferroni_failures(est: np.ndarray, p: np.ndarray, n: int, alpha: float, divisor: int,
                         criterion: Criterion, sigma: float) -> int:
    side_risk = alpha / divisor / 2.0
    lower = clopper_pearson_lower_values(est, n, side_risk)
    upper = clopper_pearson_upper_values(est, n, side_risk)
    if criterion == "intervals":
        return int(np.count_nonzero(np.any((lower > p) | (upper < p), axis=1)))

    rows = np.arange(est.shape[0])
    i1 = np.argmax(lower, axis=1)
    masked = upper.copy()
    masked[rows, i1] = -np.inf
    i2 = np.argmax(masked, axis=1)
    emitted = mult_radius_values(lower[rows, i1], upper[rows, i2], sigma)
    truth = true_radius(p, "mult", sigma).as_float()
    return int(np.count_nonzero(emitted > truth))


def _mono_failures(sel: np.ndarray, est: np.ndarray, p: np.ndarray, n: int, alpha: float,
                   criterion: Criterion, sigma: float) -> int:
    rows = np.arange(est.shape[0])
    i1 = np.argmax(sel, axis=1)
    lower = clopper_pearson_lower_values(est[rows, i1], n, alpha)
    if criterion == "intervals":
        return int(np.count_nonzero(lower > p[i1]))
    # the certificate is about the selected class, so compare with its own R_mono
    truth = np.array([radius_mono(float(q), sigma).as_float() for q in p])[i1]
    emitted = mono_radius_values(lower, sigma)
    return int(np.count_nonzero(emitted > truth))


def _cpm_failures(sel: np.ndarray, est: np.ndarray, p: np.ndarray, n: int, alpha: float,
                  criterion: Criterion, sigma: float) -> int:
    truth = true_radius(p, "mult", sigma).as_float()
    failures = 0
    for sel_row, est_row in zip(sel, est):
        i1, _, singletons, meta = partition_indices(sel_row)
        buckets = [[i] for i in singletons] + ([meta] if meta else [])
        alpha_prime = alpha / (len(buckets) + 1)

        lower = clopper_pearson_lower_values(np.array([est_row[i1]]), n, alpha_prime)[0]
        bucket_counts = np.array([est_row[b].sum() for b in buckets])
        uppers = clopper_pearson_upper_values(bucket_counts, n, alpha_prime)

        if criterion == "intervals":
            bucket_p = np.array([p[b].sum() for b in buckets])
            failed = lower > p[i1] or bool(np.any(uppers < bucket_p))
        else:
            emitted = mult_radius_values(np.array([lower]), np.array([uppers.max()]), sigma)[0]
            failed = emitted > truth
        failures += int(failed)
    return failures


def count_failures(p: np.ndarray, procedure: Procedure, criterion: Criterion, n: int, n0: int,
                   alpha: float, replications: int, seed: int, sigma: float) -> int:
    """Failures over ``replications`` draws, generated in chunks from one seeded stream"""
    rng = _generator(seed)
    failures = 0
    done = 0
    while done < replications:
        size = min(_CHUNK, replications - done)
        if procedure in ("cpm", "pearson_clopper_mono"):
            sel = rng.multinomial(n0, p, size=size)
            est = rng.multinomial(n, p, size=size)
            if procedure == "cpm":
                failures += _cpm_failures(sel, est, p, n, alpha, criterion, sigma)
            else:
                failures += _mono_failures(sel, est, p, n, alpha, criterion, sigma)
        else:
            est = rng.multinomial(n, p, size=size)
            divisor = p.size if procedure == "bonferroni_c" else 2
            failures += _bonferroni_failures(est, p, n, alpha, divisor, criterion, sigma)
        done += size
    return failures


def _verdict(rate: float, stderr: float, alpha: float, replications: int, min_replications: int) -> str:
    if rate > alpha + 3.0 * stderr:
        return "undercovers"
    if replications >= min_replications:
        return "covers"
    return "inconclusive"


def run_coverage(exp: CoverageExperiment, min_replications: int | None = None) -> CoverageReport:
    """Simulate the experiment and compare its failure rate with alpha"""
    minimum = min_replications if min_replications is not None else settings.MIN_COVERAGE_REPLICATIONS
    n0 = exp.n0 if exp.n0 is not None else settings.N0
    searched = exp.true_p is None
    if searched:
        p = np.asarray(find_adversarial_p(exp.procedure, exp.n, exp.alpha, criterion=exp.criterion,
                                          n0=n0, seed=exp.seed, sigma=exp.sigma))
    else:
        p = as_simplex(exp.true_p, min_classes=2)
    if exp.replications < minimum:
        logger.warning(f"{exp.replications} replications is below {minimum}; a 'covers' verdict needs more")

    failures = count_failures(p, exp.procedure, exp.criterion, exp.n, n0, exp.alpha,
                              exp.replications, exp.seed, exp.sigma)
    rate = failures / exp.replications
    stderr = math.sqrt(rate * (1.0 - rate) / exp.replications)
    verdict = _verdict(rate, stderr, exp.alpha, exp.replications, minimum)
    logger.info(f"Coverage {exp.procedure}/{exp.criterion} at p={p.tolist()}: "
                f"failure rate {rate:.5f} +/- {stderr:.5f} ({verdict})")

    return CoverageReport(
        procedure=exp.procedure,
        criterion=exp.criterion,
        true_p=p.tolist(),
        n=exp.n,
        n0=n0 if exp.procedure in ("cpm", "pearson_clopper_mono") else None,
        alpha=exp.alpha,
        replications=exp.replications,
        failures=failures,
        failure_rate=rate,
        mc_stderr=stderr,
        theoretical_floor=1.0 - exp.alpha,
        verdict=verdict,
        searched=searched,
    )


def _composition_count(n: int, parts: int) -> int:
    return math.comb(n + parts - 1, parts - 1)


@lru_cache(maxsize=8)
def _compositions(n: int, parts: int) -> np.ndarray:
    """Every vector of ``parts`` nonnegative integers summing to n"""
    if parts == 1:
        result = np.array([[n]], dtype=np.int64)
    elif parts == 2:
        k = np.arange(n + 1, dtype=np.int64)
        result = np.column_stack([k, n - k])
    else:
        blocks = []
        for first in range(n + 1):
            rest = _compositions(n - first, parts - 1)
            blocks.append(np.column_stack([np.full(rest.shape[0], first, dtype=np.int64), rest]))
        result = np.vstack(blocks)
    result.setflags(write=False)
    return result


@lru_cache(maxsize=8)
def _log_multinomial_coefficients(n: int, parts: int) -> np.ndarray:
    comps = _compositions(n, parts)
    coeffs = special.gammaln(n + 1.0) - special.gammaln(comps + 1.0).sum(axis=1)
    coeffs.setflags(write=False)
    return coeffs


def simultaneous_coverage_probability(p, n: int, alpha: float, divisor: int) -> float:
    """
    Exact probability that every per-class two-sided Clopper-Pearson interval
    at risk alpha / divisor contains its true p_i.
    """
    vec = as_simplex(p, min_classes=2)
    c = vec.size
    if divisor < 1:
        raise ConfigurationError(f"divisor must be positive, got {divisor}")
    total = _composition_count(n, c)
    if total > MAX_COMPOSITIONS:
        raise ConfigurationError(f"{total} outcomes exceed the enumeration limit of {MAX_COMPOSITIONS}")

    side_risk = alpha / divisor / 2.0
    ks = np.arange(n + 1)
    lower = clopper_pearson_lower_values(ks, n, side_risk)
    upper = clopper_pearson_upper_values(ks, n, side_risk)
    covered = (lower[:, None] <= vec[None, :]) & (upper[:, None] >= vec[None, :])

    comps = _compositions(n, c)
    inside = np.all(covered[comps, np.arange(c)], axis=1)
    with np.errstate(divide="ignore"):
        log_p = np.log(vec)
    terms = np.where(comps > 0, comps * log_p, 0.0)
    log_pmf = _log_multinomial_coefficients(n, c) + terms.sum(axis=1)
    return float(np.exp(log_pmf[inside]).sum())


def _simplex_grid(m: int, centre: tuple[int, int] | None = None, radius: int | None = None):
    """Interior points (i, j, m - i - j) / m, optionally restricted to a box around centre"""
    for i in range(1, m - 1):
        for j in range(1, m - i):
            if centre is not None and (abs(i - centre[0]) > radius or abs(j - centre[1]) > radius):
                continue
            yield i, j


def find_adversarial_p(procedure: Procedure, n: int, alpha: float, criterion: Criterion = "intervals",
                       n0: int | None = None, coarse_step: float = 0.05, fine_step: float = 0.01,
                       screening_replications: int = 2000, seed: int = 0, sigma: float = 1.0) -> list[float]:
    """
    Three-class p with the highest failure rate: a coarse simplex grid, then
    a finer grid around the worst coarse cell.

    Bonferroni procedures under the intervals criterion are scored exactly;
    everything else by a reduced Monte Carlo run.
    """
    n0 = n0 if n0 is not None else settings.N0
    exact = criterion == "intervals" and procedure in ("bonferroni_c", "bonferroni_half")

    def score(p: np.ndarray) -> float:
        if exact:
            divisor = _SEARCH_CLASSES if procedure == "bonferroni_c" else 2
            return 1.0 - simultaneous_coverage_probability(p, n, alpha, divisor)
        failures = count_failures(p, procedure, criterion, n, n0, alpha, screening_replications, seed, sigma)
        return failures / screening_replications

    def search(m: int, centre=None, radius=None) -> tuple[tuple[int, int], float]:
        best, best_score = None, -1.0
        for i, j in _simplex_grid(m, centre, radius):
            value = score(np.array([i, j, m - i - j], dtype=float) / m)
            if value > best_score:
                best, best_score = (i, j), value
        return best, best_score

    coarse_m = round(1.0 / coarse_step)
    fine_m = round(1.0 / fine_step)
    scale = fine_m // coarse_m
    (ci, cj), coarse_score = search(coarse_m)
    (fi, fj), fine_score = search(fine_m, centre=(ci * scale, cj * scale), radius=scale)

    found = [fi / fine_m, fj / fine_m, (fine_m - fi - fj) / fine_m]
    logger.info(f"Adversarial p for {procedure}/{criterion}: {found} (score {fine_score:.5f}, coarse {coarse_score:.5f})")
    return found
