"""
Product upper bound (PUB) on a network's Lipschitz constant.

Per-layer bounds: spectral norm for dense layers (power iteration), the
max |gamma / sqrt(var + eps)| rule for batch norm, 1 for pooling and
1-Lipschitz activations, 1 + product of the main path for residual blocks.
The chain product is folded in log space.
"""
import logging
import math
from collections.abc import Iterator, Sequence

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigurationError
from app.schemas.layers import (
    BatchNormLayer,
    DenseLayer,
    LayerBound,
    LayerSpec,
    PubResult,
    ResidualLayer,
    SpectralNormEstimate,
)

logger = logging.getLogger(__name__)

_STABLE_STEPS = 3
_AVERAGE_WINDOW = 10


def spectral_norm_power_iteration(matrix, tol: float | None = None, max_iters: int | None = None,
                                  seed: int = 0) -> SpectralNormEstimate:
    """
    Largest singular value of ``matrix`` by alternating products with A and A^T.

    Stops once the relative change of the estimate is <= tol for three
    consecutive iterations. If max_iters is reached first, the mean of the
    last ten estimates is returned with ``converged=False``.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.size == 0:
        raise ConfigurationError(f"expected a nonempty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ConfigurationError("matrix has non-finite entries")
    if not np.any(a):
        raise ConfigurationError("matrix is identically zero")

    tol = tol if tol is not None else settings.POWER_ITER_TOL
    max_iters = max_iters if max_iters is not None else settings.POWER_ITER_MAX

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    v /= np.linalg.norm(v)

    history: list[float] = []
    stable = 0
    estimate = 0.0
    for iteration in range(1, max_iters + 1):
        u = a @ v
        new_estimate = float(np.linalg.norm(u))
        w = a.T @ u
        w_norm = np.linalg.norm(w)
        if w_norm == 0.0:
            # v fell into the null space; restart from a fresh direction
            v = rng.standard_normal(a.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / w_norm

        history.append(new_estimate)
        if estimate > 0.0 and abs(new_estimate - estimate) <= tol * new_estimate:
            stable += 1
        else:
            stable = 0
        estimate = new_estimate
        if stable >= _STABLE_STEPS:
            return SpectralNormEstimate(value=estimate, iterations=iteration, converged=True)

    averaged = float(np.mean(history[-_AVERAGE_WINDOW:])) if history else estimate
    logger.warning(f"Power iteration did not converge in {max_iters} iterations; "
                   f"averaging the last {_AVERAGE_WINDOW} estimates ({averaged:.6g})")
    return SpectralNormEstimate(value=averaged, iterations=max_iters, converged=False)


def batchnorm_lipschitz(layer: BatchNormLayer) -> float:
    gamma = np.asarray(layer.gamma, dtype=float)
    var = np.asarray(layer.running_var, dtype=float)
    return float(np.max(np.abs(gamma / np.sqrt(var + layer.eps))))


def expand_layers(layers: Sequence[LayerSpec]) -> Iterator[LayerSpec]:
    """Yield each layer ``repeat`` times"""
    for layer in layers:
        for _ in range(layer.repeat):
            yield layer


def _log(value: float) -> float:
    return math.log(value) if value > 0.0 else -math.inf


def _layer_log_bound(layer: LayerSpec, tol: float | None, max_iters: int | None, seed: int) -> tuple[float, bool]:
    """Log of the layer's Lipschitz bound and whether its estimate converged"""
    if isinstance(layer, DenseLayer):
        if layer.norm is not None:
            return math.log(layer.norm), True
        estimate = spectral_norm_power_iteration(layer.matrix, tol=tol, max_iters=max_iters, seed=seed)
        return _log(estimate.value), estimate.converged
    if isinstance(layer, BatchNormLayer):
        return _log(batchnorm_lipschitz(layer)), True
    if isinstance(layer, ResidualLayer):
        main = pub(layer.main, tol=tol, max_iters=max_iters, seed=seed)
        # log(1 + PUB(main)) without leaving log space
        return float(np.logaddexp(0.0, main.log_pub)), main.converged
    # pooling and 1-Lipschitz activations
    return 0.0, True


def layer_lipschitz(layer: LayerSpec, tol: float | None = None, max_iters: int | None = None,
                    seed: int = 0) -> float:
    """Lipschitz bound of a single (unrepeated) layer; inf when it overflows a float"""
    log_value, _ = _layer_log_bound(layer, tol, max_iters, seed)
    return math.inf if log_value > math.log(np.finfo(float).max) else math.exp(log_value)


def pub(layers: Sequence[LayerSpec], tol: float | None = None, max_iters: int | None = None,
        seed: int = 0) -> PubResult:
    """
    PUB = prod of per-layer bounds, accumulated as a sum of logs.

    Repeated layers are expanded first; a repeated dense matrix is only
    power-iterated once.
    """
    if not layers:
        raise ConfigurationError("PUB needs at least one layer")

    per_layer: list[LayerBound] = []
    cache: dict[int, tuple[float, bool]] = {}
    for index, layer in enumerate(expand_layers(layers)):
        key = id(layer)
        if key not in cache:
            cache[key] = _layer_log_bound(layer, tol, max_iters, seed)
        log_value, converged = cache[key]
        if not math.isfinite(log_value):
            raise ConfigurationError(
                f"layer {index} ({layer.kind}) has Lipschitz bound exp({log_value}); must be positive and finite"
            )
        per_layer.append(LayerBound.from_log(index, layer.kind, log_value, converged))

    log_pub = math.fsum(layer.log_lipschitz for layer in per_layer)
    logger.debug(f"PUB over {len(per_layer)} layers: log_pub={log_pub:.6f}")
    return PubResult(log_pub=log_pub, per_layer=per_layer)


def linear_network_true_lipschitz(layers: Sequence[LayerSpec]) -> float:
    """
    Spectral norm of W_L ... W_1 for an all-dense chain with explicit matrices.

    The running product is renormalized after every layer and the scale kept
    in log space, so very deep chains neither overflow nor underflow.
    """
    chain = list(expand_layers(layers))
    if not chain:
        raise ConfigurationError("linear network needs at least one layer")

    product: np.ndarray | None = None
    log_scale = 0.0
    for index, layer in enumerate(chain):
        if not isinstance(layer, DenseLayer) or layer.matrix is None:
            raise ConfigurationError(f"layer {index} is not a dense layer with an explicit matrix")
        weight = np.asarray(layer.matrix, dtype=float)
        if product is None:
            product = weight
        else:
            if weight.shape[1] != product.shape[0]:
                raise ConfigurationError(
                    f"shape mismatch at layer {index}: {weight.shape} after output dimension {product.shape[0]}"
                )
            product = weight @ product
        scale = float(np.linalg.norm(product))
        if scale == 0.0:
            return 0.0
        product = product / scale
        log_scale += math.log(scale)

    return float(np.linalg.norm(product, 2)) * math.exp(log_scale)


def kaiming_uniform_chain(depth: int = 110, in_dim: int = 100, out_dim: int = 10, hidden: int = 100,
                          seed: int = 0) -> list[DenseLayer]:
    """
    Linear chain with entries drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    the default Kaiming-uniform initialization of a linear layer.
    """
    if depth < 1:
        raise ConfigurationError(f"depth must be at least 1, got {depth}")
    rng = np.random.default_rng(seed)
    dims = [in_dim] + [hidden] * (depth - 1) + [out_dim]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(matrix=weight.tolist()))
    return layers
