"""
Classifier oracles and deterministic Monte Carlo count collection.

Every batch of every sampling round draws from its own Philox stream keyed by
(seed, input id, stream id, batch index), so counts are reproducible and
batches can be produced in any order and summed.
"""
import hashlib
import logging
from typing import Protocol, runtime_checkable

import numpy as np

from app.core.errors import ConfigurationError, SamplingError
from app.numerics.lipschitz import constraint_value, extremal_g, solve_s0
from app.numerics.simplex import as_simplex
from app.schemas.counts import ClassCounts
from app.schemas.lipschitz import ExtremalSolution

logger = logging.getLogger(__name__)

SELECTION_STREAM = 0
ESTIMATION_STREAM = 1


@runtime_checkable
class ClassifierOracle(Protocol):
    """Hard classifier evaluated on noise draws: predict returns class ids in [0, num_classes)"""
    num_classes: int

    def draw_noise(self, rng: np.random.Generator, size: int) -> np.ndarray:
        ...

    def predict(self, input_id: str, noise: np.ndarray) -> np.ndarray:
        ...


def _input_key(input_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(input_id.encode("utf-8"), digest_size=8).digest(), "little")


def stream_generator(seed: int, input_id: str, stream_id: int, batch_index: int = 0) -> np.random.Generator:
    """Independent counter-based generator for one (input, stream, batch)"""
    sequence = np.random.SeedSequence(seed, spawn_key=(_input_key(input_id), stream_id, batch_index))
    return np.random.Generator(np.random.Philox(sequence))


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    edges = np.cumsum(p)
    edges[-1] = 1.0
    return np.minimum(np.searchsorted(edges, u, side="right"), p.size - 1)


def multinomial_sample(p, rng: np.random.Generator) -> int:
    """One class id drawn with probability p[k], by inverse CDF over the cumulative sums"""
    vec = as_simplex(p)
    return int(_inverse_cdf(vec, np.asarray([rng.random()]))[0])


class MultinomialOracle:
    """Synthetic classifier whose smoothed class distribution is exactly ``p`` for every input"""

    def __init__(self, p):
        self.p = as_simplex(p, min_classes=2)
        self.num_classes = self.p.size

    def draw_noise(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random(size)

    def predict(self, input_id: str, noise: np.ndarray) -> np.ndarray:
        return _inverse_cdf(self.p, np.asarray(noise, dtype=float))


def collect_counts(oracle: ClassifierOracle, input_id: str, m: int, seed: int, stream_id: int,
                   batch: int = 1000) -> ClassCounts:
    """
    Count the oracle's predictions over m noise draws.

    Oracle exceptions and out-of-range predictions are raised as SamplingError
    carrying the index of the first affected sample.
    """
    if m < 1:
        raise ConfigurationError(f"round size must be positive, got {m}")
    if batch < 1:
        raise ConfigurationError(f"batch size must be positive, got {batch}")

    counts = np.zeros(oracle.num_classes, dtype=np.int64)
    for batch_index, start in enumerate(range(0, m, batch)):
        size = min(batch, m - start)
        rng = stream_generator(seed, input_id, stream_id, batch_index)
        noise = oracle.draw_noise(rng, size)
        try:
            predictions = np.asarray(oracle.predict(input_id, noise))
        except Exception as e:
            raise SamplingError(f"oracle failed on input {input_id!r}: {e}", sample_index=start) from e

        if predictions.shape != (size,):
            raise SamplingError(f"oracle returned shape {predictions.shape} for a batch of {size}", sample_index=start)
        bad = np.flatnonzero((predictions < 0) | (predictions >= oracle.num_classes))
        if bad.size:
            raise SamplingError(f"class id {predictions[bad[0]]} out of range", sample_index=start + int(bad[0]))
        counts += np.bincount(predictions.astype(np.int64), minlength=oracle.num_classes)

    logger.debug(f"Collected {m} predictions for {input_id!r} on stream {stream_id}")
    return ClassCounts.from_array(counts)


class ExtremalOracle:
    """
    One-dimensional soft binary classifier F(x) = g*(x / sigma) built from the
    extremal function, so its smoothed value at the origin is ``p_target`` and
    its input-space Lipschitz constant is L / sigma.

    As a hard oracle, a noise draw is a pair (delta, u) and the prediction is
    class 0 when u < F(delta); the class-0 count then has mean F~(0).
    """
    num_classes = 2

    def __init__(self, solution: ExtremalSolution, sigma: float, p_target: float):
        self.solution = solution
        self.sigma = sigma
        self.p_target = p_target

    @property
    def lipschitz(self) -> float:
        return self.solution.L / self.sigma

    def soft(self, x):
        return extremal_g(np.asarray(x, dtype=float) / self.sigma, self.solution)

    def smoothed_value(self, x: float = 0.0) -> float:
        """Exact E[F(x + delta)]: the extremal mean with s0 shifted by x / sigma"""
        return constraint_value(self.solution.s0 - x / self.sigma, self.solution.L)

    def monte_carlo_smoothed_value(self, x: float, m: int, seed: int = 0) -> float:
        rng = stream_generator(seed, "extremal", ESTIMATION_STREAM)
        delta = rng.normal(0.0, self.sigma, size=m)
        return float(np.mean(self.soft(x + delta)))

    def draw_noise(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.column_stack([rng.normal(0.0, self.sigma, size=size), rng.random(size)])

    def predict(self, input_id: str, noise: np.ndarray) -> np.ndarray:
        delta, u = noise[:, 0], noise[:, 1]
        return np.where(u < self.soft(delta), 0, 1)


def lipschitz_1d_oracle(L: float, p_target: float, sigma: float) -> ExtremalOracle:
    """Extremal oracle for slope L in unit-noise coordinates and smoothed value p_target"""
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    solution = solve_s0(p_target, L)
    return ExtremalOracle(solution, sigma, p_target)
