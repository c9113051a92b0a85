"""Greedy decoding, UNK post-processing and attention export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .model import ModelConfig, Params, _attend_batch, _encode_batch, _output_batch, make_batch, mixture
from .textcore import PAD_ID, START_ID, STOP_ID, UNK_ID, Sentence, Vocabulary

SENTINEL = "<sentinel>"
MAX_DECODE_LEN = 100


def max_length(source_len: int) -> int:
    return min(math.ceil(1.5 * source_len) + 5, MAX_DECODE_LEN)


@dataclass
class DecodeResult:
    tokens: Sentence                  # STOP stripped
    ids: List[int]                    # emitted ids, STOP included when emitted
    betas: List[np.ndarray] = field(repr=False)  # per step, over source positions
    gates: List[float] = field(repr=False)       # per step sentinel weight g

    @property
    def unk_replacements(self) -> List[Tuple[int, int]]:
        """(step, source position) for each emitted UNK, position = leftmost argmax of beta."""
        return [(t, int(np.argmax(self.betas[t]))) for t, i in enumerate(self.ids) if i == UNK_ID]


def greedy_decode_batch(sources: Sequence[Sentence], params: Params, config: ModelConfig,
                        vocab: Vocabulary) -> List[DecodeResult]:
    """Decode several sentences together; each row stops at STOP or its own length cap."""
    ids = [vocab.encode(s) for s in sources]
    if any(len(s) == 0 for s in ids):
        raise ValueError("cannot decode an empty source")
    batch = make_batch([(s, []) for s in ids])
    X, smask = batch.src, batch.src_mask
    B, T = X.shape
    caps = np.array([max_length(len(s)) for s in ids])
    H_enc, _ = _encode_batch(X, smask, params)
    h = np.zeros((B, config.hidden_dim))
    c = np.zeros((B, config.hidden_dim))
    y_prev = np.full(B, START_ID, dtype=np.intp)
    done = np.zeros(B, dtype=bool)
    out_ids: List[List[int]] = [[] for _ in range(B)]
    betas: List[List[np.ndarray]] = [[] for _ in range(B)]
    gates: List[List[float]] = [[] for _ in range(B)]
    step = 0
    while not done.all():
        alpha, _ = _attend_batch(h, H_enc, smask, params)
        h, c, _, _, p_lstm, _ = _output_batch(y_prev, h, c, alpha, H_enc, params)
        P = mixture(alpha, p_lstm, X, smask, config.copy_enabled)
        P[:, PAD_ID] = -np.inf
        P[:, START_ID] = -np.inf
        y = np.argmax(P, axis=1)
        step += 1
        for b in np.flatnonzero(~done):
            n = len(ids[b])
            out_ids[b].append(int(y[b]))
            betas[b].append(alpha[b, :n].copy())
            gates[b].append(float(alpha[b, T]))
            if y[b] == STOP_ID or step >= caps[b]:
                done[b] = True
        y_prev = y
    results = []
    for b in range(B):
        toks = [vocab.tokens[i] for i in out_ids[b] if i != STOP_ID]
        results.append(DecodeResult(toks, out_ids[b], betas[b], gates[b]))
    return results


def greedy_decode(source: Sentence, model, max_len_policy=None) -> DecodeResult:
    """Greedy decode one sentence with ``model`` (anything with params/config/vocab)."""
    return greedy_decode_batch([source], model.params, model.config, model.vocab)[0]


def translate(sources: Sequence[Sentence], params: Params, config: ModelConfig, vocab: Vocabulary,
              batch_size: int = 64) -> List[DecodeResult]:
    out: List[DecodeResult] = []
    for lo in range(0, len(sources), batch_size):
        out.extend(greedy_decode_batch(sources[lo:lo + batch_size], params, config, vocab))
    return out


def unk_replace(result: DecodeResult, source: Sentence) -> Sentence:
    """Swap each UNK for the source word that got the most attention at that step."""
    if not source:
        raise ValueError("source must be non-empty")
    out = list(result.tokens)
    for step, pos in result.unk_replacements:
        if step < len(out):
            out[step] = source[pos]
    return out


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def write_translations(path, sentences: Sequence[Sentence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sentences:
            fh.write(" ".join(s) + "\n")


def read_tokenized(path) -> List[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return [line.split() for line in fh.read().split("\n")[:-1]] if path else []


def attention_tsv(result: DecodeResult, source: Sentence, vocab: Vocabulary) -> str:
    """Decoder steps (incl. STOP) as rows, source tokens plus the sentinel as columns."""
    lines = ["\t".join(["step"] + list(source) + [SENTINEL])]
    for t, i in enumerate(result.ids):
        cells = [f"{x:.6f}" for x in result.betas[t]] + [f"{result.gates[t]:.6f}"]
        lines.append("\t".join([vocab.tokens[i]] + cells))
    return "\n".join(lines) + "\n"


def unk_replacements_json(results: Sequence[DecodeResult]) -> str:
    return json.dumps([[list(r) for r in res.unk_replacements] for res in results])
