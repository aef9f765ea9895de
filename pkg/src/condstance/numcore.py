"""Dense numeric primitives with hand-written backward passes.

Everything here works on float64 numpy arrays. Parameters are kept in plain
``dict[str, np.ndarray]`` containers so the optimizer, the gradient checker
and the serializer can all walk them by name.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Optional

import numpy as np

DTYPE = np.float64
CE_FLOOR = 1e-12

Params = Dict[str, np.ndarray]


class ShapeError(ValueError):
    pass


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=DTYPE)
    b = np.asarray(b, dtype=DTYPE)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def sigmoid(x):
    # tanh form never overflows, unlike 1 / (1 + exp(-x)) for very negative x
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=DTYPE)))


def tanh(x):
    return np.tanh(np.asarray(x, dtype=DTYPE))


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=DTYPE)
    e = np.exp(z - z.max())
    return e / e.sum()


def cross_entropy(p, y: int) -> float:
    """``-ln p[y]`` with the probability clamped at ``CE_FLOOR``."""
    return -float(np.log(max(float(p[y]), CE_FLOOR)))


def is_clamped(p, y: int) -> bool:
    return float(p[y]) < CE_FLOOR


def dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if rate == 0.0:
        return np.ones(shape, dtype=DTYPE)
    keep = rng.random(shape) >= rate
    return keep.astype(DTYPE) / (1.0 - rate)


def dropout(x, rate: float, rng: Optional[np.random.Generator] = None,
            train: bool = True, return_mask: bool = False):
    """Inverted dropout. In eval mode (or at rate 0) returns ``x`` unchanged."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    x = np.asarray(x, dtype=DTYPE)
    if not train or rate == 0.0:
        return (x, None) if return_mask else x
    if rng is None:
        raise ValueError("train-mode dropout needs a random generator")
    mask = dropout_mask(x.shape, rate, rng)
    out = x * mask
    return (out, mask) if return_mask else out


# --------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)


def adam_step(params: Params, grads: Mapping[str, np.ndarray], state: AdamState,
              names: Optional[Iterable[str]] = None) -> None:
    """Bias-corrected Adam update, applied in place to ``params``.

    Only the blocks listed in ``names`` (default: every key of ``grads``) are
    touched; frozen blocks are simply left out by the caller.
    """
    names = list(grads) if names is None else list(names)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name in names:
        p, g = params[name], grads[name]
        if p.shape != g.shape:
            raise ShapeError(f"adam_step: parameter {name!r} has shape {p.shape}, gradient {g.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.alpha * (m / c1) / (np.sqrt(v / c2) + state.eps)


# --------------------------------------------------------------------------
# finite-difference gradient checking

class GradCheckError(ValueError):
    pass


@dataclass
class GradCheckResult:
    max_rel_error: Dict[str, float]
    tolerance: float

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def relative_error(a, n):
    a = np.asarray(a, dtype=DTYPE)
    n = np.asarray(n, dtype=DTYPE)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)


def grad_check(loss_fn: Callable[[Params], float], params: Params,
               analytic: Mapping[str, np.ndarray], step: float = 1e-5,
               tolerance: float = 1e-4, blocks: Optional[Iterable[str]] = None) -> GradCheckResult:
    """Compare ``analytic`` gradients against central differences, entry by entry.

    ``loss_fn(params)`` must be pure: it is called repeatedly while single
    entries of ``params`` are nudged in place (and restored).
    """
    loss0 = loss_fn(params)
    if not np.isfinite(loss0):
        raise GradCheckError(f"loss is not finite: {loss0}")
    names = list(analytic) if blocks is None else list(blocks)
    result = {}
    for name in names:
        p = params[name]
        g = np.asarray(analytic[name], dtype=DTYPE)
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter {p.shape}")
        flat = p.reshape(-1)
        numeric = np.empty(flat.shape, dtype=DTYPE)
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + step
            lp = loss_fn(params)
            flat[i] = old - step
            lm = loss_fn(params)
            flat[i] = old
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise GradCheckError(f"loss became non-finite while probing {name}[{i}]")
            numeric[i] = (lp - lm) / (2.0 * step)
        err = relative_error(g.reshape(-1), numeric)
        result[name] = float(err.max()) if err.size else 0.0
    return GradCheckResult(result, tolerance)


def zeros_like_params(params: Mapping[str, np.ndarray]) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
