"""Pointer/RNN mixture sequence-to-sequence model.

A bidirectional LSTM encoder (forward and backward states summed) feeds a
sentinel attention.  The attention weights over source positions drive both
the context vector of the decoder LSTM and a pointer distribution over source
tokens; the weight on the sentinel slot, ``g``, mixes the two:

    P(w) = g * P_lstm(w) + (1 - g) * P_ptr(w)

with ``P_ptr(w) = sum_{x_j = w} beta_j / (1 - g)`` so that ``P`` is a proper
distribution.  Everything is batched over a leading axis with padding masks,
and the backward pass is written out by hand.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .tensor import LstmCellParams, lstm_backward, lstm_forward, make_rng, softmax, uniform_init
from .textcore import PAD_ID, START_ID, STOP_ID

SIZE_PRESETS = {"S": (128, 128), "ME": (192, 192), "L": (256, 256)}

MASK_PENALTY = -1e30
PROB_FLOOR = 1e-30
INIT_SCALE = 0.1

Params = Dict[str, np.ndarray]

LSTM_NAMES = ("enc_fwd", "enc_bwd", "dec")


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 192
    hidden_dim: int = 192
    share_embeddings: bool = False
    embeddings_fixed: bool = False
    copy_enabled: bool = True
    sentinel_loss_enabled: bool = False

    def __post_init__(self):
        if self.embed_dim <= 0 or self.hidden_dim <= 0 or self.vocab_size <= 4:
            raise ValueError("embed_dim, hidden_dim must be positive and vocab_size > 4")

    @classmethod
    def preset(cls, size: str, vocab_size: int, **kw) -> "ModelConfig":
        m, h = SIZE_PRESETS[size]
        return cls(vocab_size=vocab_size, embed_dim=m, hidden_dim=h, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


def init_params(config: ModelConfig, seed: int = 0, embeddings: Optional[np.ndarray] = None,
                scale: float = INIT_SCALE) -> Params:
    """Uniform(-scale, scale) weights, forget-gate bias 1, other biases 0."""
    M, H, V = config.embed_dim, config.hidden_dim, config.vocab_size
    rng = make_rng(seed, "model", "init")
    p: Params = {}
    if embeddings is not None:
        embeddings = np.asarray(embeddings, dtype=np.float64)
        if embeddings.shape != (V, M):
            raise ValueError(f"embedding shape {embeddings.shape} != {(V, M)}")
        p["E_enc"] = embeddings.copy()
    else:
        p["E_enc"] = uniform_init(rng, (V, M), scale)
    if config.share_embeddings:
        p["E_dec"] = p["E_enc"]
    else:
        p["E_dec"] = p["E_enc"].copy() if embeddings is not None else uniform_init(rng, (V, M), scale)
    for name, in_dim in (("enc_fwd", M), ("enc_bwd", M), ("dec", M + H)):
        cell = LstmCellParams.init(rng, in_dim, H, scale)
        p[f"{name}.W"], p[f"{name}.U"], p[f"{name}.b"] = cell.W, cell.U, cell.b
    p["W_q"] = uniform_init(rng, (H, H), scale)
    p["s"] = uniform_init(rng, (H,), scale)
    p["b_enc"] = np.zeros(1)
    p["b_sent"] = np.zeros(1)
    p["W_out"] = uniform_init(rng, (2 * H, V), scale)
    p["b_out"] = np.zeros(V)
    return p


def param_names(config: ModelConfig) -> List[str]:
    """Names of distinct tensors (the shared embedding is listed once)."""
    names = ["E_enc"] + ([] if config.share_embeddings else ["E_dec"])
    for n in LSTM_NAMES:
        names += [f"{n}.W", f"{n}.U", f"{n}.b"]
    return names + ["W_q", "s", "b_enc", "b_sent", "W_out", "b_out"]


def trainable_names(config: ModelConfig) -> List[str]:
    names = param_names(config)
    if config.embeddings_fixed:
        names = [n for n in names if n not in ("E_enc", "E_dec")]
    return names


def count_params(config: ModelConfig, trainable_only: bool = True) -> int:
    M, H, V = config.embed_dim, config.hidden_dim, config.vocab_size
    shapes = {
        "E_enc": V * M, "E_dec": V * M,
        "enc_fwd.W": M * 4 * H, "enc_bwd.W": M * 4 * H, "dec.W": (M + H) * 4 * H,
        "W_q": H * H, "s": H, "b_enc": 1, "b_sent": 1, "W_out": 2 * H * V, "b_out": V,
    }
    for n in LSTM_NAMES:
        shapes[f"{n}.U"] = H * 4 * H
        shapes[f"{n}.b"] = 4 * H
    names = trainable_names(config) if trainable_only else param_names(config)
    return sum(shapes[n] for n in names)


def tie_shared(params: Params, config: ModelConfig) -> Params:
    if config.share_embeddings:
        params["E_dec"] = params["E_enc"]
    return params


def _cell(params: Params, name: str):
    return params[f"{name}.W"], params[f"{name}.U"], params[f"{name}.b"]


# ---------------------------------------------------------------------------
# Batches
# ---------------------------------------------------------------------------

@dataclass
class Batch:
    """Padded id arrays.  ``tgt`` ends with STOP; ``dec_in`` starts with START."""

    src: np.ndarray
    src_mask: np.ndarray
    dec_in: np.ndarray
    tgt: np.ndarray
    tgt_mask: np.ndarray

    @property
    def size(self) -> int:
        return self.src.shape[0]


def make_batch(pairs: Sequence[Tuple[Sequence[int], Sequence[int]]]) -> Batch:
    if not pairs:
        raise ValueError("empty batch")
    B = len(pairs)
    Tx = max(len(s) for s, _ in pairs)
    Ty = max(len(t) for _, t in pairs) + 1
    src = np.full((B, Tx), PAD_ID, dtype=np.intp)
    tgt = np.full((B, Ty), PAD_ID, dtype=np.intp)
    dec_in = np.full((B, Ty), PAD_ID, dtype=np.intp)
    src_mask = np.zeros((B, Tx))
    tgt_mask = np.zeros((B, Ty))
    for b, (s, t) in enumerate(pairs):
        if len(s) == 0:
            raise ValueError(f"empty source in batch position {b}")
        src[b, :len(s)] = s
        src_mask[b, :len(s)] = 1.0
        full = list(t) + [STOP_ID]
        tgt[b, :len(full)] = full
        tgt_mask[b, :len(full)] = 1.0
        dec_in[b, :len(full)] = [START_ID] + list(t)
    return Batch(src, src_mask, dec_in, tgt, tgt_mask)


# ---------------------------------------------------------------------------
# Batched building blocks
# ---------------------------------------------------------------------------

def _encode_batch(X, mask, params):
    B, T = X.shape
    H = params["enc_fwd.U"].shape[0]
    emb = params["E_enc"][X]
    dt = emb.dtype
    out = {}
    for name, order in (("enc_fwd", range(T)), ("enc_bwd", range(T - 1, -1, -1))):
        W, U, b = _cell(params, name)
        h = np.zeros((B, H), dtype=dt)
        c = np.zeros((B, H), dtype=dt)
        states = np.zeros((B, T, H), dtype=dt)
        caches = [None] * T
        for t in order:
            hn, cn, caches[t] = lstm_forward(emb[:, t], h, c, W, U, b)
            m = mask[:, t, None]
            # padded positions carry the previous state through unchanged
            h = m * hn + (1.0 - m) * h
            c = m * cn + (1.0 - m) * c
            states[:, t] = h
        out[name] = (states, caches)
    H_enc = out["enc_fwd"][0] + out["enc_bwd"][0]
    return H_enc, out


def _encode_backward(dH_enc, X, mask, enc_cache, params, grads, dE):
    B, T, H = dH_enc.shape
    for name, order in (("enc_fwd", range(T - 1, -1, -1)), ("enc_bwd", range(T))):
        W, U, _ = _cell(params, name)
        dW, dU, db = grads[f"{name}.W"], grads[f"{name}.U"], grads[f"{name}.b"]
        caches = enc_cache[name][1]
        dh = np.zeros((B, H))
        dc = np.zeros((B, H))
        for t in order:
            m = mask[:, t, None]
            dh = dh + dH_enc[:, t]
            dx, dhp, dcp = lstm_backward(m * dh, m * dc, caches[t], W, U, dW, dU, db)
            dh = dhp + (1.0 - m) * dh
            dc = dcp + (1.0 - m) * dc
            np.add.at(dE, X[:, t], dx)


def _attend_batch(h_prev, H_enc, src_mask, params):
    B, T, H = H_enc.shape
    q = h_prev @ params["W_q"]
    F = np.concatenate([H_enc, np.broadcast_to(params["s"], (B, 1, H))], axis=1)
    A = np.tanh(F * q[:, None, :])
    scores = A.sum(axis=2)
    scores[:, :T] += params["b_enc"][0] + (1.0 - src_mask) * MASK_PENALTY
    scores[:, T] += params["b_sent"][0]
    alpha = softmax(scores, axis=1)
    return alpha, (q, F, A)


def _output_batch(y_prev, h_prev, c_prev, alpha, H_enc, params):
    T = H_enc.shape[1]
    beta = alpha[:, :T]
    ctx = np.einsum("bt,bth->bh", beta, H_enc)
    z = np.concatenate([params["E_dec"][y_prev], ctx], axis=1)
    h, c, lcache = lstm_forward(z, h_prev, c_prev, *_cell(params, "dec"))
    hc = np.concatenate([h, ctx], axis=1)
    p_lstm = softmax(hc @ params["W_out"] + params["b_out"], axis=1)
    return h, c, ctx, hc, p_lstm, lcache


def mixture(alpha, p_lstm, X, src_mask, copy_enabled: bool):
    """Final distribution per batch row: g * P_lstm + scattered beta."""
    if not copy_enabled:
        return p_lstm.copy()
    T = X.shape[1]
    g = alpha[:, T]
    P = g[:, None] * p_lstm
    rows = np.repeat(np.arange(X.shape[0]), T)
    np.add.at(P, (rows, X.reshape(-1)), (alpha[:, :T] * src_mask).reshape(-1))
    return P


# ---------------------------------------------------------------------------
# Loss and gradients
# ---------------------------------------------------------------------------

@dataclass
class LossResult:
    ce: np.ndarray            # per-example cross entropy (B,)
    sl: np.ndarray            # per-example sentinel loss (B,)
    objective: np.floating    # weighted sum that the gradients refer to
    n_tokens: int
    n_correct: int            # teacher-forced argmax hits over real target steps
    clamped: int = 0
    cache: Optional[dict] = field(default=None, repr=False)


def forward_batch(batch: Batch, params: Params, config: ModelConfig,
                  weights: Optional[np.ndarray] = None, keep_cache: bool = True) -> LossResult:
    """Teacher-forced losses for a batch.

    ``weights`` scales each example's contribution to ``objective``
    (defaults to 1/B, i.e. the batch mean of the per-example sums).
    """
    X, smask = batch.src, batch.src_mask
    B, T = X.shape
    Ty = batch.tgt.shape[1]
    H = config.hidden_dim
    if weights is None:
        weights = np.full(B, 1.0 / B)
    H_enc, enc_cache = _encode_batch(X, smask, params)
    dt = H_enc.dtype
    h = np.zeros((B, H), dtype=dt)
    c = np.zeros((B, H), dtype=dt)
    ce = np.zeros(B, dtype=dt)
    sl = np.zeros(B, dtype=dt)
    steps = []
    clamped = 0
    n_correct = 0
    ar = np.arange(B)
    for t in range(Ty):
        y = batch.tgt[:, t]
        tm = batch.tgt_mask[:, t]
        alpha, att_cache = _attend_batch(h, H_enc, smask, params)
        h_new, c_new, ctx, hc, p_lstm, lcache = _output_batch(batch.dec_in[:, t], h, c, alpha, H_enc, params)
        g = alpha[:, T]
        match = (X == y[:, None]) * smask
        copy_mass = np.sum(alpha[:, :T] * match, axis=1)
        p_ly = p_lstm[ar, y]
        if config.copy_enabled:
            p_y = g * p_ly + copy_mass
        else:
            p_y = p_ly
        small = p_y < PROB_FLOOR
        clamped += int(np.sum(small & (tm > 0)))
        ce += tm * -np.log(np.maximum(p_y, PROB_FLOOR))
        sl += tm * -np.log(np.maximum(g + copy_mass, PROB_FLOOR))
        P = mixture(alpha, p_lstm, X, smask, config.copy_enabled)
        P[:, PAD_ID] = -1.0
        P[:, START_ID] = -1.0
        n_correct += int(np.sum((np.argmax(P, axis=1) == y) & (tm > 0)))
        if keep_cache:
            steps.append(dict(h_prev=h, alpha=alpha, att=att_cache, ctx=ctx, hc=hc,
                              p_lstm=p_lstm, lcache=lcache, match=match, copy_mass=copy_mass,
                              p_y=p_y, p_ly=p_ly))
        h, c = h_new, c_new
    # kept as a numpy scalar so extended-precision evaluations stay extended
    objective = np.sum(weights * (ce + (sl if config.sentinel_loss_enabled else 0.0)))
    cache = None
    if keep_cache:
        cache = dict(batch=batch, H_enc=H_enc, enc=enc_cache, steps=steps, weights=weights)
    return LossResult(ce, sl, objective, int(batch.tgt_mask.sum()), n_correct, clamped, cache)


def backward_batch(result: LossResult, params: Params, config: ModelConfig) -> Dict[str, np.ndarray]:
    """Exact gradients of ``result.objective`` with respect to every tensor."""
    cache = result.cache
    if cache is None:
        raise ValueError("forward pass was run without keep_cache")
    batch: Batch = cache["batch"]
    X, smask = batch.src, batch.src_mask
    B, T = X.shape
    H = config.hidden_dim
    M = config.embed_dim
    H_enc = cache["H_enc"]
    weights = cache["weights"]
    grads = {n: np.zeros_like(params[n]) for n in param_names(config)}
    dE_enc = np.zeros_like(params["E_enc"])
    dE_dec = np.zeros_like(params["E_dec"])
    dH_enc = np.zeros_like(H_enc)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    W_out, W_q = params["W_out"], params["W_q"]
    W_dec, U_dec, _ = _cell(params, "dec")
    ar = np.arange(B)
    for t in range(len(cache["steps"]) - 1, -1, -1):
        st = cache["steps"][t]
        y = batch.tgt[:, t]
        w = batch.tgt_mask[:, t] * weights
        alpha = st["alpha"]
        g = alpha[:, T]
        beta = alpha[:, :T]
        match = st["match"]
        # loss -> (g, beta, logits)
        if config.copy_enabled:
            d_py = -w / np.maximum(st["p_y"], PROB_FLOOR)
            dg = d_py * st["p_ly"]
            dbeta = d_py[:, None] * match
            coef = d_py * g * st["p_ly"]
        else:
            dg = np.zeros(B)
            dbeta = np.zeros((B, T))
            coef = -w
        if config.sentinel_loss_enabled:
            d_s = -w / np.maximum(g + st["copy_mass"], PROB_FLOOR)
            dg = dg + d_s
            dbeta = dbeta + d_s[:, None] * match
        dlogits = -coef[:, None] * st["p_lstm"]
        dlogits[ar, y] += coef
        grads["W_out"] += st["hc"].T @ dlogits
        grads["b_out"] += dlogits.sum(axis=0)
        dhc = dlogits @ W_out.T
        dh = dhc[:, :H] + dh_next
        dctx = dhc[:, H:]
        # decoder LSTM
        dz, dh_prev, dc_prev = lstm_backward(dh, dc_next, st["lcache"], W_dec, U_dec,
                                             grads["dec.W"], grads["dec.U"], grads["dec.b"])
        np.add.at(dE_dec, batch.dec_in[:, t], dz[:, :M])
        dctx = dctx + dz[:, M:]
        # context vector
        dbeta = dbeta + np.einsum("bh,bth->bt", dctx, H_enc)
        dH_enc += beta[:, :, None] * dctx[:, None, :]
        # attention softmax
        dalpha = np.concatenate([dbeta, dg[:, None]], axis=1)
        dscores = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
        grads["b_enc"] += np.sum(dscores[:, :T] * smask)
        grads["b_sent"] += np.sum(dscores[:, T])
        q, F, A = st["att"]
        dA = dscores[:, :, None] * (1.0 - A * A)
        dF = dA * q[:, None, :]
        dq = np.sum(dA * F, axis=1)
        dH_enc += dF[:, :T]
        grads["s"] += dF[:, T].sum(axis=0)
        grads["W_q"] += st["h_prev"].T @ dq
        dh_next = dh_prev + dq @ W_q.T
        dc_next = dc_prev
    _encode_backward(dH_enc, X, smask, cache["enc"], params, grads, dE_enc)
    if config.embeddings_fixed:
        dE_enc[:] = 0.0
        dE_dec[:] = 0.0
    if config.share_embeddings:
        dE_enc += dE_dec
        grads["E_enc"] = dE_enc
        grads["E_dec"] = dE_enc
    else:
        grads["E_enc"] = dE_enc
        grads["E_dec"] = dE_dec
    for n, v in grads.items():
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite gradient for parameter {n!r}")
    return grads


# ---------------------------------------------------------------------------
# Single-example interface
# ---------------------------------------------------------------------------

@dataclass
class EncoderStates:
    h_enc: np.ndarray          # (T, H), forward + backward
    forward: np.ndarray
    backward: np.ndarray
    source_ids: np.ndarray

    @property
    def length(self) -> int:
        return self.h_enc.shape[0]


@dataclass
class AttentionOutput:
    alpha_norm: np.ndarray
    query: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        return self.alpha_norm[:-1]

    @property
    def g(self) -> float:
        return float(self.alpha_norm[-1])


@dataclass
class StepOutput:
    p_lstm: np.ndarray
    p_ptr: np.ndarray
    p: np.ndarray
    context: np.ndarray
    h: np.ndarray
    c: np.ndarray
    attention: AttentionOutput
    degenerate_pointer: bool = False


def encode(source: Sequence[int], params: Params, config: Optional[ModelConfig] = None) -> EncoderStates:
    ids = np.asarray(source, dtype=np.intp)
    if ids.size == 0:
        raise ValueError("cannot encode an empty source")
    _, cache = _encode_batch(ids[None], np.ones((1, ids.size)), params)
    fwd = cache["enc_fwd"][0][0]
    bwd = cache["enc_bwd"][0][0]
    return EncoderStates(fwd + bwd, fwd, bwd, ids)


def attend(h_dec_prev: np.ndarray, enc: EncoderStates, params: Params) -> AttentionOutput:
    alpha, (q, _, _) = _attend_batch(np.asarray(h_dec_prev, dtype=np.float64)[None],
                                     enc.h_enc[None], np.ones((1, enc.length)), params)
    return AttentionOutput(alpha[0], q[0])


def pointer_dist(att: AttentionOutput, source: Sequence[int], vocab_size: int) -> Tuple[np.ndarray, bool]:
    """Pointer distribution over the vocabulary, renormalized by 1 - g.

    ``source`` holds vocabulary ids with OOV tokens already mapped to UNK, so
    their mass lands on UNK.  Returns (distribution, degenerate) where
    ``degenerate`` flags the saturated case g ~ 1, in which the uniform
    distribution over source positions is returned instead.
    """
    source = np.asarray(source, dtype=np.intp)
    out = np.zeros(vocab_size)
    denom = 1.0 - att.g
    if denom <= 1e-12:
        np.add.at(out, source, 1.0 / source.size)
        return out, True
    np.add.at(out, source, att.beta / denom)
    return out, False


def decode_step(y_prev: int, state: Tuple[np.ndarray, np.ndarray], enc: EncoderStates,
                params: Params, config: ModelConfig) -> StepOutput:
    h_prev, c_prev = (np.asarray(a, dtype=np.float64) for a in state)
    att = attend(h_prev, enc, params)
    alpha = att.alpha_norm[None]
    h, c, ctx, _, p_lstm, _ = _output_batch(np.array([y_prev]), h_prev[None], c_prev[None], alpha,
                                            enc.h_enc[None], params)
    p_ptr, degenerate = pointer_dist(att, enc.source_ids, config.vocab_size)
    if config.copy_enabled:
        p = att.g * p_lstm[0] + (1.0 - att.g) * p_ptr
    else:
        p = p_lstm[0].copy()
    return StepOutput(p_lstm[0], p_ptr, p, ctx[0], h[0], c[0], att, degenerate)


def initial_state(config: ModelConfig) -> Tuple[np.ndarray, np.ndarray]:
    return np.zeros(config.hidden_dim), np.zeros(config.hidden_dim)


@dataclass
class PairLoss:
    ce: float
    sl: float
    steps: List[StepOutput]


def forward_loss(pair: Tuple[Sequence[int], Sequence[int]], params: Params,
                 config: ModelConfig) -> PairLoss:
    """Teacher-forced (ce, sentinel loss, per-step outputs) for one pair.

    The target gets STOP appended; losses are sums over decoder steps.
    """
    src, tgt = pair
    enc = encode(src, params, config)
    state = initial_state(config)
    y_prev = START_ID
    ce = sl = 0.0
    steps = []
    for y in list(tgt) + [STOP_ID]:
        out = decode_step(y_prev, state, enc, params, config)
        steps.append(out)
        ce -= np.log(max(out.p[y], PROB_FLOOR))
        copy_mass = float(np.sum(out.attention.beta[enc.source_ids == y]))
        sl -= np.log(max(out.attention.g + copy_mass, PROB_FLOOR))
        state = (out.h, out.c)
        y_prev = y
    return PairLoss(float(ce), float(sl), steps)


def backward(pair: Tuple[Sequence[int], Sequence[int]], params: Params,
             config: ModelConfig) -> Dict[str, np.ndarray]:
    """Gradients of ce (+ sentinel loss when enabled) for a single pair."""
    res = forward_batch(make_batch([pair]), params, config, weights=np.ones(1))
    return backward_batch(res, params, config)


def objective(pairs, params: Params, config: ModelConfig, weights=None) -> float:
    return forward_batch(make_batch(pairs), params, config, weights, keep_cache=False).objective


def loss_and_grads(pairs, params: Params, config: ModelConfig, weights=None):
    res = forward_batch(make_batch(pairs), params, config, weights)
    return res, backward_batch(res, params, config)

