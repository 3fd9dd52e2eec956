"""Small MLPs with hand-written backprop, a squashed Gaussian head and Adam.

Everything works on batches: inputs are ``(batch, features)`` arrays, and a
single vector is treated as a batch of one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)


class ShapeMismatch(ValueError):
    pass


class MlpParams:
    """Layer ``i`` computes ``x @ weights[i].T + biases[i]``; ReLU on hidden layers.

    All arrays are views into one contiguous vector ``buffer`` (order w0, b0,
    w1, b1, ...), so optimizers and Polyak averaging act on a single array.
    """

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]) -> None:
        if len(weights) != len(biases) or not weights:
            raise ShapeMismatch("need matching, nonempty weight and bias lists")
        for i, (w, b) in enumerate(zip(weights, biases)):
            w, b = np.asarray(w), np.asarray(b)
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeMismatch(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i and w.shape[1] != np.shape(weights[i - 1])[0]:
                raise ShapeMismatch(f"layer {i} input {w.shape[1]} does not chain")
        dtype = np.result_type(*weights, *biases, np.float32)
        pieces = []
        for w, b in zip(weights, biases):
            pieces.extend((np.asarray(w, dtype).ravel(), np.asarray(b, dtype).ravel()))
        self.buffer = np.concatenate(pieces)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        i = 0
        for w, b in zip(weights, biases):
            shape = np.shape(w)
            n = shape[0] * shape[1]
            self.weights.append(self.buffer[i : i + n].reshape(shape))
            i += n
            self.biases.append(self.buffer[i : i + shape[0]])
            i += shape[0]

    def __repr__(self) -> str:
        return f"MlpParams(sizes={self.sizes}, dtype={self.buffer.dtype})"

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    def arrays(self) -> list[np.ndarray]:
        """Parameter arrays in buffer order (w0, b0, w1, b1, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams(self.weights, self.biases)

    def __deepcopy__(self, memo) -> "MlpParams":
        # keep the weight/bias views tied to the new buffer
        return self.copy()

    def flat(self) -> np.ndarray:
        return self.buffer.copy()

    def set_flat(self, vec: np.ndarray) -> None:
        vec = np.asarray(vec)
        if vec.shape != self.buffer.shape:
            raise ShapeMismatch("flat vector has the wrong length")
        self.buffer[...] = vec

    def astype(self, dtype) -> "MlpParams":
        return MlpParams([w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases])

    @classmethod
    def from_flat(cls, shapes: list[tuple[int, int]], vec: np.ndarray) -> "MlpParams":
        weights, biases = [], []
        i = 0
        for n_out, n_in in shapes:
            weights.append(vec[i : i + n_out * n_in].reshape(n_out, n_in))
            i += n_out * n_in
            biases.append(vec[i : i + n_out])
            i += n_out
        if i != len(vec):
            raise ShapeMismatch("flat vector length does not match the layer shapes")
        return cls(weights, biases)


def flatten_grads(grads: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([g.ravel() for g in grads])


def init_mlp(sizes: list[int], rng: np.random.Generator, dtype=np.float64) -> MlpParams:
    """Uniform fan-in initialization, ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))``."""
    if len(sizes) < 2 or min(sizes) < 1:
        raise ShapeMismatch(f"bad layer sizes {sizes}")
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)).astype(dtype))
        biases.append(rng.uniform(-bound, bound, size=n_out).astype(dtype))
    return MlpParams(weights, biases)


def _as_batch(x: np.ndarray, width: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != width:
        raise ShapeMismatch(f"{what} has shape {x.shape}, expected (*, {width})")
    return x, single


def forward_cached(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass on a batch; the cache holds each layer's input."""
    x, _ = _as_batch(x, params.in_dim, "input")
    cache = []
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.append(h)
        h = h @ w.T + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h, cache


def backward_cached(
    params: MlpParams, cache: list[np.ndarray], upstream: np.ndarray, need_input: bool = True
) -> tuple[list[np.ndarray], np.ndarray | None]:
    """Gradients of ``sum(upstream * forward(x))``; returns (arrays-order grads, input grad)."""
    g, _ = _as_batch(upstream, params.out_dim, "upstream")
    if g.shape[0] != cache[0].shape[0]:
        raise ShapeMismatch("upstream batch size differs from the cached input")
    grads: list[np.ndarray] = [None] * (2 * len(params.weights))  # type: ignore[list-item]
    for i in range(len(params.weights) - 1, -1, -1):
        h_in = cache[i]
        grads[2 * i] = g.T @ h_in
        grads[2 * i + 1] = g.sum(axis=0)
        if i == 0 and not need_input:
            return grads, None
        g = g @ params.weights[i]
        if i > 0:
            # cache[i] is the post-ReLU output of layer i-1
            g = g * (h_in > 0.0)
    return grads, g


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    out, _ = forward_cached(params, x)
    return out[0] if np.asarray(x).ndim == 1 else out


def backward(params: MlpParams, x: np.ndarray, upstream: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    single = np.asarray(x).ndim == 1
    _, cache = forward_cached(params, x)
    grads, g_in = backward_cached(params, cache, upstream)
    return grads, (g_in[0] if single else g_in)


# ---------------------------------------------------------------- policy head


@dataclass(frozen=True)
class PolicyOutput:
    mean: np.ndarray
    log_std: np.ndarray
    raw_log_std: np.ndarray

    @classmethod
    def from_head(cls, head: np.ndarray, band: tuple[float, float] = (-20.0, 2.0)) -> "PolicyOutput":
        """Split a ``(batch, 2d)`` network output into mean and clamped log-std."""
        d = head.shape[-1] // 2
        raw = head[..., d:]
        return cls(mean=head[..., :d], log_std=np.clip(raw, *band), raw_log_std=raw)

    def head_grad(self, g_mean: np.ndarray, g_log_std: np.ndarray) -> np.ndarray:
        """Chain mean/log-std gradients back to the raw head (clamp has zero slope outside)."""
        inside = self.raw_log_std == self.log_std
        return np.concatenate([g_mean, g_log_std * inside], axis=-1)


def log1m_tanh_sq(u: np.ndarray) -> np.ndarray:
    """``log(1 - tanh(u)**2)`` without cancellation for large ``|u|``."""
    return 2.0 * (LOG_2 - u - np.logaddexp(0.0, -2.0 * u))


def squashed_from_noise(out: PolicyOutput, noise: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reparameterized draw: ``u = mean + std * noise``, ``a = tanh(u)``; returns (a, log_prob)."""
    std = np.exp(out.log_std)
    u = out.mean + std * noise
    action = np.tanh(u)
    gauss = -0.5 * noise * noise - out.log_std - 0.5 * LOG_2PI
    log_prob = np.sum(gauss - log1m_tanh_sq(u), axis=-1)
    return action, log_prob


def squashed_backward(
    out: PolicyOutput, noise: np.ndarray, action: np.ndarray, g_action: np.ndarray | None, g_log_prob: np.ndarray | None
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient w.r.t. (mean, log_std) at fixed noise, given upstream grads of action and log-prob."""
    sig_eps = np.exp(out.log_std) * noise
    g_mean = np.zeros_like(out.mean)
    g_ls = np.zeros_like(out.log_std)
    if g_action is not None:
        da = (1.0 - action * action) * g_action
        g_mean = g_mean + da
        g_ls = g_ls + da * sig_eps
    if g_log_prob is not None:
        glp = np.asarray(g_log_prob)[..., None]
        g_mean = g_mean + 2.0 * action * glp
        g_ls = g_ls + (2.0 * action * sig_eps - 1.0) * glp
    return g_mean, g_ls


def sample_squashed_gaussian(out: PolicyOutput, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    noise = rng.standard_normal(np.shape(out.mean))
    return squashed_from_noise(out, noise)


# ---------------------------------------------------------------- optimizer


@dataclass
class Adam:
    """Adaptive-moment optimizer over a list of arrays, updated in place."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> list[np.ndarray]:
        if len(params) != len(grads) or any(p.shape != np.shape(g) for p, g in zip(params, grads)):
            raise ShapeMismatch("gradients do not match parameters")
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        elif any(p.shape != m.shape for p, m in zip(params, self.m)) or len(self.m) != len(params):
            raise ShapeMismatch("optimizer moments do not match parameters")
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        return params
