"""Embedding pretraining strategies: None, Plain, PlainExt, Retro, RetroExt."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .lexicon import Lexicon, RetrofitProblem, lexicon_constraints, retrofit
from .tensor import make_rng, sigmoid, uniform_init
from .textcore import ParallelCorpus, Sentence, Vocabulary, preprocess

logger = logging.getLogger(__name__)

STRATEGIES = ("none", "plain", "plainext", "retro", "retroext")

INIT_SCALE = 0.1


@dataclass
class EmbeddingMatrix:
    rows: np.ndarray
    vocab_fingerprint: str

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(self.rows)):
            raise ValueError("embedding matrix contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]


@dataclass
class SgnsConfig:
    dim: int = 192
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    min_lr: float = 1e-4
    batch_size: int = 128
    seed: int = 0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError("window must be >= 1")
        if self.dim < 1 or self.negatives < 0 or self.epochs < 0:
            raise ValueError("invalid SGNS configuration")


@dataclass
class EmbedStrategy:
    kind: str = "none"
    external_corpus: Optional[str] = None
    sgns: SgnsConfig = field(default_factory=SgnsConfig)
    retrofit_iterations: int = 10
    retrofit_delta: float = 1.0

    def __post_init__(self):
        self.kind = self.kind.lower()
        if self.kind not in STRATEGIES:
            raise ValueError(f"unknown embedding strategy {self.kind!r}")
        if self.kind.endswith("ext") and not self.external_corpus:
            raise ValueError(f"strategy {self.kind!r} requires an external corpus")
        if self.kind == "none" and self.external_corpus:
            raise ValueError("strategy 'none' does not take an external corpus")

    def manifest(self) -> dict:
        return asdict(self)


def random_embeddings(vocab_size: int, dim: int, seed: int) -> np.ndarray:
    return uniform_init(make_rng(seed, "embed", "init"), (vocab_size, dim), INIT_SCALE)


# ---------------------------------------------------------------------------
# Skip-gram with negative sampling
# ---------------------------------------------------------------------------

def _flatten(sentences: Sequence[Sentence], vocab: Vocabulary) -> Tuple[np.ndarray, np.ndarray]:
    ids, sent = [], []
    for k, s in enumerate(sentences):
        enc = vocab.encode(s)
        ids.extend(enc)
        sent.extend([k] * len(enc))
    return np.asarray(ids, dtype=np.intp), np.asarray(sent, dtype=np.intp)


def _skipgram_pairs(ids, sent, window, rng):
    """(center, context) pairs with word2vec's randomly shrunk window."""
    n = ids.size
    reach = rng.integers(1, window + 1, size=n)
    centers, contexts = [], []
    pos = np.arange(n)
    for d in range(1, window + 1):
        for sign in (-1, 1):
            j = pos + sign * d
            ok = (j >= 0) & (j < n) & (reach >= d)
            ok[ok] &= sent[j[ok]] == sent[pos[ok]]
            centers.append(ids[pos[ok]])
            contexts.append(ids[j[ok]])
    return np.concatenate(centers), np.concatenate(contexts)


class _Sgns:
    def __init__(self, vocab_size: int, config: SgnsConfig):
        self.config = config
        self.W = random_embeddings(vocab_size, config.dim, config.seed)
        self.C = np.zeros_like(self.W)
        self.rng = make_rng(config.seed, "sgns", "train")

    def train(self, sentences, vocab, epochs):
        cfg = self.config
        ids, sent = _flatten(sentences, vocab)
        if ids.size == 0 or epochs == 0:
            return
        counts = np.bincount(ids, minlength=len(vocab)).astype(np.float64)
        noise = counts ** 0.75
        noise_cdf = np.cumsum(noise / noise.sum())
        noise_cdf[-1] = 1.0
        rng = self.rng
        total = None
        done = 0
        for _ in range(epochs):
            centers, contexts = _skipgram_pairs(ids, sent, cfg.window, rng)
            if total is None:
                # lr decays linearly over the expected number of pairs
                total = max(1, centers.size * epochs)
            order = rng.permutation(centers.size)
            centers, contexts = centers[order], contexts[order]
            for lo in range(0, centers.size, cfg.batch_size):
                c = centers[lo:lo + cfg.batch_size]
                o = contexts[lo:lo + cfg.batch_size]
                lr = max(cfg.min_lr, cfg.lr * (1.0 - done / total))
                done += c.size
                neg = np.searchsorted(noise_cdf, rng.random((c.size, cfg.negatives)))
                self._step(c, o, neg, lr)

    def _step(self, c, o, neg, lr):
        w = self.W[c]                       # (B, M)
        pos = self.C[o]                     # (B, M)
        negv = self.C[neg]                  # (B, K, M)
        g_pos = sigmoid(np.sum(w * pos, axis=1)) - 1.0
        g_neg = sigmoid(np.einsum("bm,bkm->bk", w, negv))
        dw = g_pos[:, None] * pos + np.einsum("bk,bkm->bm", g_neg, negv)
        np.add.at(self.C, o, -lr * g_pos[:, None] * w)
        np.add.at(self.C, neg.reshape(-1), (-lr * g_neg[:, :, None] * w[:, None, :]).reshape(-1, w.shape[1]))
        np.add.at(self.W, c, -lr * dw)


def pretrain_sgns(sentences: Sequence[Sentence], vocab: Vocabulary, config: SgnsConfig,
                  adapt_sentences: Optional[Sequence[Sentence]] = None) -> EmbeddingMatrix:
    """Skip-gram negative-sampling vectors for ``vocab`` (OOV tokens train UNK).

    The returned rows are input plus output vectors; output vectors start at
    zero, so zero epochs gives back the random initialization.  With ``adapt_sentences`` a second pass of the same number of epochs is
    run on those sentences alone, continuing from the first pass.
    """
    if not sentences:
        raise ValueError("no sentences to pretrain on")
    model = _Sgns(len(vocab), config)
    model.train(sentences, vocab, config.epochs)
    if adapt_sentences is not None:
        model.train(adapt_sentences, vocab, config.epochs)
    return EmbeddingMatrix(model.W + model.C, vocab.fingerprint)


def read_text_corpus(path) -> List[Sentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            toks = preprocess(line)
            if toks:
                out.append(toks)
    return out


def retrofit_embeddings(emb: EmbeddingMatrix, lexicon: Lexicon, vocab: Vocabulary,
                        iterations: int = 10, delta: float = 1.0) -> EmbeddingMatrix:
    problem = RetrofitProblem(emb.rows, lexicon_constraints(lexicon, vocab), delta=delta,
                              omega="degree", iterations=iterations)
    return EmbeddingMatrix(retrofit(problem), emb.vocab_fingerprint)


def build_embeddings(strategy: EmbedStrategy, train: ParallelCorpus, lexicon: Optional[Lexicon],
                     vocab: Vocabulary) -> EmbeddingMatrix:
    kind = strategy.kind
    cfg = strategy.sgns
    if kind == "none":
        return EmbeddingMatrix(random_embeddings(len(vocab), cfg.dim, cfg.seed), vocab.fingerprint)
    sentences = train.sources + train.targets
    if kind in ("plain", "retro"):
        emb = pretrain_sgns(sentences, vocab, cfg)
    else:
        external = read_text_corpus(strategy.external_corpus)
        emb = pretrain_sgns(external + sentences, vocab, cfg, adapt_sentences=sentences)
    if kind.startswith("retro"):
        if lexicon is None:
            raise ValueError(f"strategy {kind!r} requires a lexicon")
        emb = retrofit_embeddings(emb, lexicon, vocab, strategy.retrofit_iterations,
                                  strategy.retrofit_delta)
    return emb


# ---------------------------------------------------------------------------
# Text format
# ---------------------------------------------------------------------------

def save_embeddings(path, emb: EmbeddingMatrix, vocab: Vocabulary) -> None:
    if len(emb) != len(vocab):
        raise ValueError(f"embedding rows {len(emb)} != vocabulary size {len(vocab)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(emb)} {emb.dim}\n")
        for tok, row in zip(vocab.tokens, emb.rows):
            fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(path) -> Tuple[List[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header")
        count, dim = int(header[0]), int(header[1])
        tokens, rows = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            tokens.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(tokens) != count:
        raise ValueError(f"{path}: header announces {count} rows, found {len(tokens)}")
    return tokens, np.array(rows, dtype=np.float64).reshape(count, dim)


def load_embeddings(path, vocab: Vocabulary) -> EmbeddingMatrix:
    """Read an embedding file and arrange its rows in ``vocab`` order."""
    tokens, rows = read_embeddings(path)
    index = {t: k for k, t in enumerate(tokens)}
    missing = [t for t in vocab.tokens if t not in index]
    if missing:
        raise ValueError(f"{path}: {len(missing)} vocabulary tokens missing (e.g. {missing[0]!r})")
    return EmbeddingMatrix(rows[[index[t] for t in vocab.tokens]], vocab.fingerprint)
