import numpy as np

from app.core.errors import ConfigurationError

SIMPLEX_ATOL = 1e-9


def as_simplex(p, min_classes: int = 1) -> np.ndarray:
    """Validate a probability vector and return it as a float array"""
    vec = np.asarray(p, dtype=float)
    if vec.ndim != 1 or vec.size < min_classes:
        raise ConfigurationError(f"expected a probability vector with at least {min_classes} entries, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)) or np.any(vec < 0.0):
        raise ConfigurationError("probability vector entries must be finite and nonnegative")
    if abs(vec.sum() - 1.0) > SIMPLEX_ATOL:
        raise ConfigurationError(f"probability vector sums to {vec.sum()!r}, expected 1")
    return vec


def top_two(p: np.ndarray) -> tuple[float, float]:
    """Largest and second-largest entries (second is 0 for a single class)"""
    ordered = np.sort(np.asarray(p, dtype=float))[::-1]
    second = float(ordered[1]) if ordered.size > 1 else 0.0
    return float(ordered[0]), second
