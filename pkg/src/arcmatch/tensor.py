"""Dense-tensor substrate.

Tensors are plain float64 numpy arrays in row-major (C) order; every
operation here is pure and single-threaded. Randomness comes from numpy's
PCG64 generator seeded explicitly, so identical seeds give identical
streams on one platform.
"""

import numpy as np

from .errors import ConfigError, NumericError, ShapeError

ACTIVATIONS = ("relu", "sigmoid")


def make_rng(seed: int) -> np.random.Generator:
    """Deterministic generator for a 64-bit seed (PCG64)."""
    return np.random.default_rng(seed)


def affine(w: np.ndarray, v: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Compute w @ v + b for a rank-2 w, rank-1 v and rank-1 b."""
    if w.ndim != 2 or v.ndim != 1 or b.ndim != 1:
        raise ShapeError(
            f"affine expects ranks (2,1,1), got shapes {w.shape}, {v.shape}, {b.shape}"
        )
    if w.shape[1] != v.shape[0] or w.shape[0] != b.shape[0]:
        raise ShapeError(
            f"affine shape mismatch: w {w.shape} incompatible with v {v.shape}, b {b.shape}"
        )
    return w @ v + b


def relu(v: np.ndarray) -> np.ndarray:
    return np.maximum(v, 0.0)


def sigmoid(v: np.ndarray) -> np.ndarray:
    """Numerically stable logistic; never overflows for large |v|."""
    v = np.asarray(v, dtype=np.float64)
    out = np.empty_like(v)
    pos = v >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-v[pos]))
    ev = np.exp(v[~pos])
    out[~pos] = ev / (1.0 + ev)
    return out


def activate(v: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return relu(v)
    if kind == "sigmoid":
        return sigmoid(v)
    raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def activate_grad_from_output(out: np.ndarray, kind: str) -> np.ndarray:
    """Derivative of the activation expressed through its own output.

    relu' = 1 where out > 0, sigmoid' = out * (1 - out). Gated-off units
    have out == 0 and get derivative 0 under both, which is exactly the
    discounting the gate requires.
    """
    if kind == "relu":
        return (out > 0.0).astype(np.float64)
    if kind == "sigmoid":
        return out * (1.0 - out)
    raise ConfigError(f"unknown activation {kind!r}; expected one of {ACTIVATIONS}")


def init_uniform(shape, fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. uniform in [-r, r] with r = sqrt(6 / (fan_in + fan_out))."""
    if fan_in <= 0 or fan_out <= 0:
        raise ShapeError(f"fan_in/fan_out must be positive, got {fan_in}, {fan_out}")
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


def finite_diff(f, theta: np.ndarray, eps: float) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector.

    (f(theta + eps*e_i) - f(theta - eps*e_i)) / (2*eps) per coordinate.
    Raises NumericError if f returns a non-finite value.
    """
    if eps <= 0:
        raise ShapeError(f"eps must be positive, got {eps}")
    theta = np.asarray(theta, dtype=np.float64)
    grad = np.zeros_like(theta)
    for i in range(theta.size):
        tp = theta.copy()
        tm = theta.copy()
        tp[i] += eps
        tm[i] -= eps
        fp = float(f(tp))
        fm = float(f(tm))
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError(f"finite_diff: non-finite evaluation at coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad
