"""Original<->Modern word lexicon, dictionary replacement and retrofitting."""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .textcore import Sentence, Vocabulary, preprocess

logger = logging.getLogger(__name__)

# second-person forms that the crawled dictionary lacks
SECOND_PERSON = (
    ("thou", "you"),
    ("thee", "you"),
    ("thy", "your"),
    ("thine", "yours"),
    ("thyself", "yourself"),
)


@dataclass
class Lexicon:
    pairs: List[Tuple[str, str]]
    loaded_count: int = 0
    augmented_count: int = 0
    _by_modern: Dict[str, List[str]] = field(init=False, repr=False)

    def __post_init__(self):
        self._by_modern = defaultdict(list)
        for orig, mod in self.pairs:
            self._by_modern[mod].append(orig)

    def __len__(self):
        return len(self.pairs)

    def originals_for(self, modern: str) -> List[str]:
        return self._by_modern.get(modern, [])


def _norm_word(word: str) -> Optional[str]:
    toks = preprocess(word.strip())
    if len(toks) != 1:
        return None
    return toks[0]


def load_lexicon(path, augment: bool = True) -> Lexicon:
    """Read an ``original<TAB>modern`` file; ``#`` lines are comments.

    Multi-word entries are skipped with a warning.  The second-person forms
    are appended when ``augment`` is set and they are not already present.
    """
    pairs: List[Tuple[str, str]] = []
    seen = set()
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated fields, got {len(fields)}")
            orig, mod = _norm_word(fields[0]), _norm_word(fields[1])
            if orig is None or mod is None:
                skipped += 1
                continue
            if (orig, mod) not in seen:
                seen.add((orig, mod))
                pairs.append((orig, mod))
    if skipped:
        logger.warning("%s: skipped %d multi-word or empty entries", path, skipped)
    loaded = len(pairs)
    if augment:
        for p in SECOND_PERSON:
            if p not in seen:
                seen.add(p)
                pairs.append(p)
    return Lexicon(pairs, loaded_count=loaded, augmented_count=len(pairs))


def dictionary_translate(sentence: Sequence[str], lexicon: Lexicon,
                         target_freq: Mapping[str, int]) -> Sentence:
    """Replace every modern word found in the lexicon by an original-side word.

    Among several candidates the one most frequent on the training target
    side wins; ties go to the lexicographically smallest.
    """
    out = []
    for tok in sentence:
        cands = lexicon.originals_for(tok)
        if cands:
            out.append(min(cands, key=lambda w: (-target_freq.get(w, 0), w)))
        else:
            out.append(tok)
    return out


# ---------------------------------------------------------------------------
# Retrofitting
# ---------------------------------------------------------------------------

OmegaScheme = Union[str, float]


@dataclass
class RetrofitProblem:
    """Inputs of one retrofitting run.

    ``omega`` is either ``"degree"`` (weight 1/degree(i) for each neighbour
    of word i) or a positive float used for every constraint.
    """

    P: np.ndarray
    constraints: List[Tuple[int, int]]
    delta: float = 1.0
    omega: OmegaScheme = "degree"
    iterations: int = 10

    def __post_init__(self):
        self.P = np.asarray(self.P, dtype=np.float64)
        if self.P.ndim == 1:
            self.P = self.P[:, None]
        if not np.all(np.isfinite(self.P)):
            raise ValueError("retrofit input contains non-finite values")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.omega != "degree" and not float(self.omega) > 0:
            raise ValueError("omega must be positive")
        n = self.P.shape[0]
        for i, j in self.constraints:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"constraint ({i}, {j}) out of range for {n} rows")

    def neighbours(self) -> List[List[int]]:
        """Symmetrized, deduplicated adjacency lists (self-loops dropped)."""
        adj = [set() for _ in range(self.P.shape[0])]
        for i, j in self.constraints:
            if i != j:
                adj[i].add(j)
                adj[j].add(i)
        return [sorted(a) for a in adj]

    def weights(self):
        """Anchor weight per row and symmetric edge weight.

        The update q_i = (delta p_i + sum_j q_j / deg_i) / (delta + 1) of the
        degree scheme equals the exact coordinate minimizer of an objective
        with anchor weight delta*deg_i and unit edge weight, so both schemes
        share one symmetric form.
        """
        adj = self.neighbours()
        deg = np.array([len(a) for a in adj], dtype=np.float64)
        if self.omega == "degree":
            return adj, self.delta * deg, 1.0
        return adj, np.full(len(adj), float(self.delta)), float(self.omega)


def retrofit_objective(problem: RetrofitProblem, Q: np.ndarray) -> float:
    adj, anchor, w = problem.weights()
    Q = np.asarray(Q, dtype=np.float64).reshape(problem.P.shape)
    f = float(np.sum(anchor * np.sum((problem.P - Q) ** 2, axis=1)))
    for i, nb in enumerate(adj):
        for j in nb:
            if i < j:
                f += w * float(np.sum((Q[i] - Q[j]) ** 2))
    return f


def retrofit(problem: RetrofitProblem) -> np.ndarray:
    """Synchronous (Jacobi) retrofitting sweeps starting from Q = P."""
    adj, anchor, w = problem.weights()
    P = problem.P
    Q = P.copy()
    rows = [i for i, nb in enumerate(adj) if nb]
    if not rows:
        return Q
    # flattened neighbour lists for a vectorized sweep
    src = np.concatenate([[i] * len(adj[i]) for i in rows]).astype(np.intp)
    dst = np.concatenate([adj[i] for i in rows]).astype(np.intp)
    rows = np.array(rows, dtype=np.intp)
    deg = np.array([len(adj[i]) for i in rows], dtype=np.float64)
    denom = (anchor[rows] + w * deg)[:, None]
    anchored = anchor[rows][:, None] * P[rows]
    for _ in range(problem.iterations):
        acc = np.zeros_like(Q)
        np.add.at(acc, src, Q[dst])
        Q_new = Q.copy()
        Q_new[rows] = (anchored + w * acc[rows]) / denom
        Q = Q_new
    return Q


def lexicon_constraints(lexicon: Lexicon, vocab: Vocabulary) -> List[Tuple[int, int]]:
    """Vocabulary-id pairs for lexicon entries whose two words are both in ``vocab``."""
    out = []
    for orig, mod in lexicon.pairs:
        if orig in vocab and mod in vocab and orig != mod:
            out.append((vocab.ids[orig], vocab.ids[mod]))
    return out
