"""Teacher-forced minibatch training with Adam, checkpoints and model selection."""

from __future__ import annotations

import copy
import io
import json
import logging
import struct
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .decode import translate
from .metrics import bleu
from .model import (Batch, ModelConfig, Params, backward_batch, forward_batch, init_params,
                    make_batch, param_names, tie_shared, trainable_names)
from .tensor import AdamState, adam_step, clip_global_norm, make_rng
from .textcore import ParallelCorpus, Vocabulary

logger = logging.getLogger(__name__)

MAGIC = b"BARD"
FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 15
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0
    clip_norm: Optional[float] = 5.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float          # mean per-example summed loss
    train_token_accuracy: float
    valid_bleu: Optional[float]
    seconds: float


@dataclass
class Checkpoint:
    model_config: ModelConfig
    train_config: TrainConfig
    vocab: Vocabulary
    params: Params
    adam: AdamState
    epoch: int
    valid_bleu: Optional[float] = None
    history: List[EpochRecord] = field(default_factory=list)
    extra: dict = field(default_factory=dict)   # strategy manifest, etc.

    @property
    def config(self) -> ModelConfig:
        return self.model_config

    def meta(self) -> dict:
        return {
            "model_config": self.model_config.to_dict(),
            "train_config": asdict(self.train_config),
            "vocab_fingerprint": self.vocab.fingerprint,
            "vocab": self.vocab.tokens,
            "adam": {"lr": self.adam.lr, "beta1": self.adam.beta1, "beta2": self.adam.beta2,
                     "epsilon": self.adam.epsilon, "t": self.adam.t},
            "epoch": self.epoch,
            "valid_bleu": self.valid_bleu,
            "history": [asdict(h) for h in self.history],
            "extra": self.extra,
            "version": __version__,
        }


# ---------------------------------------------------------------------------
# Checkpoint files
# ---------------------------------------------------------------------------

def _tensors(ckpt: Checkpoint) -> List[Tuple[str, np.ndarray]]:
    out = [(n, ckpt.params[n]) for n in param_names(ckpt.model_config)]
    for n in sorted(ckpt.adam.m):
        out.append((f"adam.m.{n}", ckpt.adam.m[n]))
        out.append((f"adam.v.{n}", ckpt.adam.v[n]))
    return out


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    """Write ``BARD`` | u32 version | u64 len + JSON | u32 count | tensor blocks.

    A tensor block is u16 name length, UTF-8 name, u32 rank, u64 dims and
    little-endian float64 data.
    """
    meta = json.dumps(ckpt.meta(), sort_keys=True).encode("utf-8")
    tensors = _tensors(ckpt)
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", FORMAT_VERSION))
    buf.write(struct.pack("<Q", len(meta)))
    buf.write(meta)
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        nb = name.encode("utf-8")
        buf.write(struct.pack("<H", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


class CheckpointError(ValueError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise CheckpointError(f"unexpected end of {what}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def load_checkpoint(path, vocab: Optional[Vocabulary] = None) -> Checkpoint:
    r = _Reader(Path(path).read_bytes())
    if r.take(4, "header") != MAGIC:
        raise CheckpointError("bad magic bytes (not a checkpoint file)")
    (version,) = r.unpack("<I", "header")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    (meta_len,) = r.unpack("<Q", "header")
    try:
        meta = json.loads(r.take(meta_len, "config block").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt config block: {exc}") from None
    stored_vocab = Vocabulary(meta["vocab"])
    if stored_vocab.fingerprint != meta["vocab_fingerprint"]:
        raise CheckpointError("vocabulary fingerprint mismatch (stored vocabulary is corrupt)")
    if vocab is not None and vocab.fingerprint != meta["vocab_fingerprint"]:
        raise CheckpointError("vocabulary fingerprint mismatch")
    (count,) = r.unpack("<I", "tensor block")
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = r.unpack("<H", "tensor block")
        name = r.take(nlen, "tensor block").decode("utf-8")
        (rank,) = r.unpack("<I", "tensor block")
        dims = r.unpack(f"<{rank}Q", "tensor block") if rank else ()
        size = int(np.prod(dims)) if rank else 1
        raw = r.take(8 * size, "tensor block")
        tensors[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(dims)
    if r.pos != len(r.data):
        raise CheckpointError("trailing bytes after tensor blocks")
    mc = ModelConfig(**meta["model_config"])
    tc = TrainConfig(**meta["train_config"])
    params = {}
    for n in param_names(mc):
        if n not in tensors:
            raise CheckpointError(f"missing tensor {n!r}")
        params[n] = tensors[n]
    if not mc.share_embeddings and "E_dec" not in params:
        raise CheckpointError("missing tensor 'E_dec'")
    tie_shared(params, mc)
    a = meta["adam"]
    adam = AdamState(lr=a["lr"], beta1=a["beta1"], beta2=a["beta2"], epsilon=a["epsilon"], t=a["t"])
    for k, v in tensors.items():
        if k.startswith("adam.m."):
            adam.m[k[7:]] = v
        elif k.startswith("adam.v."):
            adam.v[k[7:]] = v
    history = [EpochRecord(**h) for h in meta["history"]]
    return Checkpoint(mc, tc, stored_vocab, params, adam, meta["epoch"], meta["valid_bleu"],
                      history, meta.get("extra", {}))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

IdPair = Tuple[List[int], List[int]]


def corpus_ids(corpus: ParallelCorpus, vocab: Vocabulary) -> List[IdPair]:
    return [(vocab.encode(s), vocab.encode(t)) for s, t in corpus.pairs]


def make_batches(pairs: Sequence[IdPair], batch_size: int, seed: int, epoch: int) -> List[Batch]:
    """Shuffle with a permutation fixed by (seed, epoch) and cut into padded batches."""
    if not pairs:
        raise ValueError("empty corpus")
    order = make_rng(seed, "shuffle", str(epoch)).permutation(len(pairs))
    return [make_batch([pairs[i] for i in order[lo:lo + batch_size]])
            for lo in range(0, len(pairs), batch_size)]


def _snapshot(params: Params, config: ModelConfig) -> Params:
    out = {n: params[n].copy() for n in param_names(config)}
    return tie_shared(out, config)


def evaluate_bleu(corpus: ParallelCorpus, params: Params, config: ModelConfig, vocab: Vocabulary) -> float:
    results = translate(corpus.sources, params, config, vocab)
    return bleu([r.tokens for r in results], corpus.targets).bleu


def train_model(train: ParallelCorpus, valid: Optional[ParallelCorpus], model_config: ModelConfig,
                train_config: TrainConfig, vocab: Vocabulary, embeddings=None,
                extra: Optional[dict] = None,
                on_epoch: Optional[Callable[[EpochRecord, Checkpoint], None]] = None) -> Checkpoint:
    """Train for ``train_config.epochs`` epochs and return the best checkpoint.

    Epochs are ranked by validation BLEU (earlier epoch wins ties).  Without
    a validation corpus the last epoch is returned.
    """
    if embeddings is not None:
        fp = getattr(embeddings, "vocab_fingerprint", None)
        if fp is not None and fp != vocab.fingerprint:
            raise ValueError("embedding/vocabulary fingerprint mismatch")
        embeddings = getattr(embeddings, "rows", embeddings)
    if model_config.vocab_size != len(vocab):
        raise ValueError(f"model vocab_size {model_config.vocab_size} != vocabulary size {len(vocab)}")
    params = init_params(model_config, seed=train_config.seed, embeddings=embeddings)
    frozen = {n: params[n].copy() for n in ("E_enc", "E_dec")} if model_config.embeddings_fixed else None
    adam = AdamState(lr=train_config.lr, beta1=train_config.beta1, beta2=train_config.beta2,
                     epsilon=train_config.epsilon)
    names = trainable_names(model_config)
    pairs = corpus_ids(train, vocab)
    history: List[EpochRecord] = []
    best: Optional[Checkpoint] = None
    for epoch in range(1, train_config.epochs + 1):
        t0 = time.perf_counter()
        total_loss = 0.0
        n_tok = n_ok = 0
        for k, batch in enumerate(make_batches(pairs, train_config.batch_size, train_config.seed, epoch)):
            res = forward_batch(batch, params, model_config)
            if not np.isfinite(res.objective):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch} batch {k} (size {batch.size}, "
                    f"src len {batch.src.shape[1]}, tgt len {batch.tgt.shape[1]})")
            grads = backward_batch(res, params, model_config)
            if train_config.clip_norm is not None:
                clip_global_norm(grads, train_config.clip_norm, names)
            adam_step(params, grads, adam, names)
            losses = res.ce + (res.sl if model_config.sentinel_loss_enabled else 0.0)
            total_loss += float(np.sum(losses))
            n_tok += res.n_tokens
            n_ok += res.n_correct
        if model_config.share_embeddings:
            assert params["E_dec"] is params["E_enc"], "shared embeddings diverged"
        if frozen is not None:
            for n, v in frozen.items():
                assert np.array_equal(params[n], v), f"fixed embedding {n} changed"
        vb = evaluate_bleu(valid, params, model_config, vocab) if valid is not None and len(valid) else None
        rec = EpochRecord(epoch, total_loss / len(pairs), n_ok / max(n_tok, 1), vb,
                          time.perf_counter() - t0)
        history.append(rec)
        logger.info("epoch %d loss %.4f acc %.4f valid_bleu %s", epoch, rec.train_loss,
                    rec.train_token_accuracy, "-" if vb is None else f"{vb:.2f}")
        ckpt = Checkpoint(model_config, train_config, vocab, _snapshot(params, model_config),
                          copy.deepcopy(adam), epoch, vb, list(history), dict(extra or {}))
        if on_epoch is not None:
            on_epoch(rec, ckpt)
        if best is None or (vb is None and valid is None) or (vb is not None and vb > best.valid_bleu):
            best = ckpt
    best.history = list(history)
    return best


def token_accuracy(pairs: Sequence[IdPair], params: Params, config: ModelConfig, batch_size: int = 64) -> float:
    """Teacher-forced argmax accuracy over target tokens (STOP included)."""
    ok = tot = 0
    for lo in range(0, len(pairs), batch_size):
        res = forward_batch(make_batch(pairs[lo:lo + batch_size]), params, config, keep_cache=False)
        ok += res.n_correct
        tot += res.n_tokens
    return ok / max(tot, 1)
