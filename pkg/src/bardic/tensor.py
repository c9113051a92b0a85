"""Small deterministic numerics core: softmax, LSTM cell, Adam, RNG streams,
and a central-difference gradient checker.

Everything runs in float64.  Batched variants take a leading batch axis.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple

import numpy as np

DTYPE = np.float64

GATES = ("i", "f", "o", "g")


# ---------------------------------------------------------------------------
# RNG
# ---------------------------------------------------------------------------

def make_rng(seed: int, *names: str) -> np.random.Generator:
    """Return a generator for the stream ``names`` derived from ``seed``.

    Streams with different names are statistically independent, and the
    same (seed, names) gives the same stream on every platform.
    """
    key = [int(seed) & 0xFFFFFFFF] + [zlib.crc32(n.encode("utf-8")) for n in names]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def uniform_init(rng: np.random.Generator, shape, scale: float = 0.1) -> np.ndarray:
    return rng.uniform(-scale, scale, size=shape).astype(DTYPE)


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------

def _float(x) -> np.ndarray:
    # keeps extended precision when given; anything else becomes float64
    x = np.asarray(x)
    return x if x.dtype in (np.float64, np.longdouble) else x.astype(DTYPE)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    x = _float(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable softmax along ``axis``.

    >>> softmax(np.array([0.0, 0.0]))
    array([0.5, 0.5])
    """
    v = _float(v)
    if v.size == 0 or v.shape[axis] == 0:
        raise ValueError("softmax of an empty vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("softmax input contains non-finite entries")
    z = v - v.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


# ---------------------------------------------------------------------------
# LSTM
# ---------------------------------------------------------------------------

@dataclass
class LstmCellParams:
    """Fused gate weights in (i, f, o, g) column order.

    W: (input_dim, 4H), U: (H, 4H), b: (4H,)
    """

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        in_dim, four_h = self.W.shape
        h = self.U.shape[0]
        if four_h != 4 * h or self.U.shape != (h, 4 * h) or self.b.shape != (4 * h,):
            raise ValueError(
                f"inconsistent LSTM shapes W={self.W.shape} U={self.U.shape} b={self.b.shape}"
            )

    @property
    def input_dim(self) -> int:
        return self.W.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.U.shape[0]

    @classmethod
    def init(cls, rng, input_dim: int, hidden_dim: int, scale: float = 0.1,
             forget_bias: float = 1.0) -> "LstmCellParams":
        b = np.zeros(4 * hidden_dim, dtype=DTYPE)
        b[hidden_dim:2 * hidden_dim] = forget_bias
        return cls(uniform_init(rng, (input_dim, 4 * hidden_dim), scale),
                   uniform_init(rng, (hidden_dim, 4 * hidden_dim), scale), b)

    @classmethod
    def zeros(cls, input_dim: int, hidden_dim: int) -> "LstmCellParams":
        return cls(np.zeros((input_dim, 4 * hidden_dim)), np.zeros((hidden_dim, 4 * hidden_dim)),
                   np.zeros(4 * hidden_dim))


def lstm_forward(x, h_prev, c_prev, W, U, b):
    """One LSTM step on a batch; returns (h, c, cache).

    x: (B, in), h_prev/c_prev: (B, H).
    """
    H = U.shape[0]
    a = x @ W + h_prev @ U + b
    i = sigmoid(a[:, :H])
    f = sigmoid(a[:, H:2 * H])
    o = sigmoid(a[:, 2 * H:3 * H])
    g = np.tanh(a[:, 3 * H:])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def lstm_backward(dh, dc, cache, W, U, dW, dU, db):
    """Backprop one step.  Accumulates into dW/dU/db, returns (dx, dh_prev, dc_prev)."""
    x, h_prev, c_prev, i, f, o, g, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dc_prev = dc * f
    da = np.concatenate([
        di * i * (1.0 - i),
        df * f * (1.0 - f),
        do * o * (1.0 - o),
        dg * (1.0 - g * g),
    ], axis=1)
    dW += x.T @ da
    dU += h_prev.T @ da
    db += da.sum(axis=0)
    return da @ W.T, da @ U.T, dc_prev


def lstm_cell(x, h_prev, c_prev, params: LstmCellParams) -> Tuple[np.ndarray, np.ndarray]:
    """Single-vector LSTM cell: returns (h, c)."""
    x = np.asarray(x, dtype=DTYPE)
    h_prev = np.asarray(h_prev, dtype=DTYPE)
    c_prev = np.asarray(c_prev, dtype=DTYPE)
    H = params.hidden_dim
    if x.shape != (params.input_dim,):
        raise ValueError(f"input shape mismatch: expected ({params.input_dim},), got {x.shape}")
    for name, arr in (("h_prev", h_prev), ("c_prev", c_prev)):
        if arr.shape != (H,):
            raise ValueError(f"{name} shape mismatch: expected ({H},), got {arr.shape}")
    h, c, _ = lstm_forward(x[None], h_prev[None], c_prev[None], params.W, params.U, params.b)
    return h[0], c[0]


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, np.ndarray], grads: Mapping[str, np.ndarray],
              state: AdamState, names: Optional[Iterable[str]] = None) -> None:
    """In-place Adam update of ``params[name]`` for every name in ``names``.

    ``names`` defaults to the keys of ``grads``.  Raises before touching any
    parameter if a gradient is non-finite.
    """
    names = list(grads if names is None else names)
    for name in names:
        g = grads[name]
        if g.shape != params[name].shape:
            raise ValueError(f"gradient shape mismatch for {name}: {g.shape} vs {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.t
    corr2 = 1.0 - b2 ** state.t
    for name in names:
        g = grads[name]
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p = params[name]
        p -= state.lr * (m / corr1) / (np.sqrt(v / corr2) + state.epsilon)


def clip_global_norm(grads: Dict[str, np.ndarray], max_norm: float,
                     names: Optional[Iterable[str]] = None) -> float:
    """Scale ``grads`` in place so their joint L2 norm is at most ``max_norm``.

    Returns the norm before clipping.
    """
    names = list(grads if names is None else names)
    total = 0.0
    for n in names:
        total += float(np.sum(grads[n] * grads[n]))
    norm = float(np.sqrt(total))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for n in names:
            grads[n] *= scale
    return norm


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------

def grad_check(f: Callable[[Dict[str, np.ndarray]], float],
               params: Dict[str, np.ndarray],
               analytic: Mapping[str, np.ndarray],
               h: float = 1e-5,
               names: Optional[Iterable[str]] = None,
               floor: float = 1e-8) -> float:
    """Max relative error between ``analytic`` and central differences of ``f``.

    Each coordinate of each named parameter is perturbed in place and
    restored.  Relative error is |a - n| / max(|a|, |n|, floor).
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    worst = 0.0
    seen = set()
    for name in (analytic if names is None else names):
        p = params[name]
        if id(p) in seen:
            continue
        seen.add(id(p))
        a = np.asarray(analytic[name], dtype=DTYPE)
        flat = p.reshape(-1)
        aflat = a.reshape(-1)
        for k in range(flat.size):
            old = flat[k]
            flat[k] = old + h
            fp = f(params)
            flat[k] = old - h
            fm = f(params)
            flat[k] = old
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise FloatingPointError(f"non-finite objective while checking {name}[{k}]")
            num = (fp - fm) / (2.0 * h)
            err = abs(aflat[k] - num) / max(abs(aflat[k]), abs(num), floor)
            worst = max(worst, float(err))
    return worst
