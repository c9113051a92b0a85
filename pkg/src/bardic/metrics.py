"""Corpus BLEU with multi-bleu.perl semantics, and PINC."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple

MAX_ORDER = 4


def ngrams(tokens: Sequence[str], n: int) -> List[Tuple[str, ...]]:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


@dataclass
class BleuReport:
    bleu: float
    precisions: List[float]
    brevity_penalty: float
    hyp_len: int
    ref_len: int
    matches: List[int]
    totals: List[int]

    @property
    def ratio(self) -> float:
        return self.hyp_len / self.ref_len if self.ref_len else 0.0

    def to_text(self) -> str:
        p = "/".join(f"{100 * x:.1f}" for x in self.precisions)
        return (f"BLEU = {self.bleu:.2f}, p1/p2/p3/p4 = {p}, BP = {self.brevity_penalty:.3f}, "
                f"ratio = {self.ratio:.3f}, hyp_len = {self.hyp_len}, ref_len = {self.ref_len}")

    def to_json(self) -> str:
        d = asdict(self)
        d["ratio"] = self.ratio
        return json.dumps(d, sort_keys=True)


def bleu(candidates: Sequence[Sequence[str]], references: Sequence[Sequence[str]]) -> BleuReport:
    """Corpus-level BLEU-4 against one reference per candidate, no smoothing.

    Clipped n-gram matches and candidate n-gram totals are summed over the
    corpus before taking precisions; any zero precision gives 0.
    """
    if len(candidates) != len(references):
        raise ValueError(f"{len(candidates)} candidates vs {len(references)} references")
    if not candidates:
        raise ValueError("empty corpus")
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        hyp_len += len(cand)
        ref_len += len(ref)
        for n in range(1, MAX_ORDER + 1):
            c = Counter(ngrams(cand, n))
            r = Counter(ngrams(ref, n))
            matches[n - 1] += sum(min(k, r[g]) for g, k in c.items())
            totals[n - 1] += max(0, len(cand) - n + 1)
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    if hyp_len == 0:
        bp = 0.0
    elif hyp_len < ref_len:
        bp = math.exp(1.0 - ref_len / hyp_len)
    else:
        bp = 1.0
    if min(precisions) > 0:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
    else:
        score = 0.0
    return BleuReport(score, precisions, bp, hyp_len, ref_len, matches, totals)


@dataclass
class PincReport:
    pinc: float            # corpus mean, scaled to [0, 100]
    N: int
    per_pair: List[float]  # each in [0, 1]
    empty_candidates: int

    def to_text(self) -> str:
        return f"PINC = {self.pinc:.2f}, N = {self.N}, pairs = {len(self.per_pair)}, empty = {self.empty_candidates}"

    def to_json(self) -> str:
        return json.dumps({"pinc": self.pinc, "N": self.N, "pairs": len(self.per_pair),
                           "empty_candidates": self.empty_candidates}, sort_keys=True)


def pinc_pair(source: Sequence[str], candidate: Sequence[str], N: int = MAX_ORDER) -> float:
    """PINC of one pair in [0, 1] using distinct n-grams.

    Orders for which the candidate has no n-grams are left out of the
    average.  An empty candidate scores 0.
    """
    overlaps = []
    for n in range(1, N + 1):
        c = set(ngrams(candidate, n))
        if not c:
            continue
        s = set(ngrams(source, n))
        overlaps.append(len(c & s) / len(c))
    if not overlaps:
        return 0.0
    return 1.0 - sum(overlaps) / len(overlaps)


def pinc(sources: Sequence[Sequence[str]], candidates: Sequence[Sequence[str]], N: int = MAX_ORDER) -> PincReport:
    if len(sources) != len(candidates):
        raise ValueError(f"{len(sources)} sources vs {len(candidates)} candidates")
    if not sources:
        raise ValueError("empty corpus")
    scores = [pinc_pair(s, c, N) for s, c in zip(sources, candidates)]
    empty = sum(1 for c in candidates if not c)
    return PincReport(100.0 * sum(scores) / len(scores), N, scores, empty)
