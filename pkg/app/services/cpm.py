"""
Certification procedures over class counts: the class partitioning method,
the full Bonferroni baseline over all classes, and the Pearson-Clopper R_mono
certificate. Ties in every argmax go to the lowest class index.
"""
import logging

import numpy as np

from app.core.errors import ConfigurationError
from app.numerics.intervals import clopper_pearson_interval, clopper_pearson_lower, clopper_pearson_upper
from app.numerics.radii import check_sigma, plugin_radius_mult, radius_mono
from app.schemas.bounds import BinomialObservation, CertifiedRadius, ConfidenceBound
from app.schemas.certificates import CpmCertificate, Partition
from app.schemas.counts import ClassCounts

logger = logging.getLogger(__name__)


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"risk level must satisfy 0 < alpha < 1, got {alpha}")


def partition_indices(counts: np.ndarray) -> tuple[int, int, list[int], list[int]]:
    """
    Peel loop on raw counts: returns (i1, i2, singletons, meta) where
    singletons starts with i2 and continues in peel order.
    """
    # stable sort on -count keeps lowest index first among ties
    order = [int(i) for i in np.argsort(-counts, kind="stable")]
    i1, i2 = order[0], order[1]
    remaining = order[2:]
    threshold = int(counts[i2])
    meta_sum = int(sum(int(counts[i]) for i in remaining))

    singletons = [i2]
    while remaining and meta_sum > threshold:
        peeled = remaining.pop(0)
        singletons.append(peeled)
        meta_sum -= int(counts[peeled])
    return i1, i2, singletons, sorted(remaining)


def build_partition(initial: ClassCounts) -> Partition:
    """Bucket the classes from selection-round counts"""
    i1, i2, singletons, meta = partition_indices(initial.array)
    c_star = len(singletons) + (1 if meta else 0) + 1
    logger.debug(f"Partition: i1={i1}, singletons={singletons}, meta size={len(meta)}, c*={c_star}")
    return Partition(i1=i1, i2=i2, attack_singletons=singletons, meta_class=meta, c_star=c_star)


def certify_cpm(initial: ClassCounts, estimation: ClassCounts, alpha: float, sigma: float) -> CpmCertificate:
    """
    Class partitioning method.

    The partition and i1 come from the selection round only. With
    alpha' = alpha / c*, the lower bound of i1 and the upper bound of every
    attack bucket (the meta-class as one summed count) are one-sided
    Clopper-Pearson bounds on the estimation counts; the radius is R_mult at
    (lower bound, largest bucket upper bound).
    """
    _check_alpha(alpha)
    check_sigma(sigma)
    if initial.num_classes != estimation.num_classes:
        raise ConfigurationError(
            f"selection has {initial.num_classes} classes but estimation has {estimation.num_classes}"
        )

    partition = build_partition(initial)
    alpha_prime = alpha / partition.c_star
    est = estimation.array
    n = estimation.total

    lower = clopper_pearson_lower(BinomialObservation(successes=int(est[partition.i1]), trials=n), alpha_prime)
    max_upper: ConfidenceBound | None = None
    for bucket in partition.buckets:
        k = int(est[bucket].sum())
        upper = clopper_pearson_upper(BinomialObservation(successes=k, trials=n), alpha_prime)
        if max_upper is None or upper.value > max_upper.value:
            max_upper = upper

    radius = plugin_radius_mult(lower, max_upper, sigma)
    return CpmCertificate(
        radius=radius,
        lower_p1=lower,
        max_upper=max_upper,
        i1=partition.i1,
        i2=partition.i2,
        partition=partition,
        alpha=alpha,
        alpha_prime=alpha_prime,
    )


def certify_bonferroni_full(estimation: ClassCounts, alpha: float, sigma: float) -> CpmCertificate:
    """
    Baseline over all c classes: two-sided Clopper-Pearson intervals at
    alpha / c per class. i1 has the highest lower bound and i2 the highest
    upper bound among the other classes.
    """
    _check_alpha(alpha)
    check_sigma(sigma)
    c = estimation.num_classes
    alpha_prime = alpha / c
    n = estimation.total

    intervals = [
        clopper_pearson_interval(BinomialObservation(successes=int(k), trials=n), alpha_prime)
        for k in estimation.counts
    ]
    lowers = np.array([lo.value for lo, _ in intervals])
    uppers = np.array([hi.value for _, hi in intervals])
    i1 = int(np.argmax(lowers))
    uppers[i1] = -np.inf
    i2 = int(np.argmax(uppers))

    radius = plugin_radius_mult(intervals[i1][0], intervals[i2][1], sigma)
    return CpmCertificate(
        radius=radius,
        lower_p1=intervals[i1][0],
        max_upper=intervals[i2][1],
        i1=i1,
        i2=i2,
        alpha=alpha,
        alpha_prime=alpha_prime,
    )


def certify_pearson_clopper_mono(estimation_i1: BinomialObservation, alpha: float, sigma: float) -> CertifiedRadius:
    """R_mono at the one-sided lower bound of the selected class; abstain when the bound is <= 1/2"""
    _check_alpha(alpha)
    lower = clopper_pearson_lower(estimation_i1, alpha)
    return radius_mono(lower.value, sigma)
