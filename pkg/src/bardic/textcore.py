"""Preprocessing, tokenization, vocabulary and corpus statistics."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

logger = logging.getLogger(__name__)

PAD, START, STOP, UNK = "<pad>", "<s>", "</s>", "<unk>"
SPECIALS = (PAD, START, STOP, UNK)
PAD_ID, START_ID, STOP_ID, UNK_ID = 0, 1, 2, 3

SPLITS = ("train", "valid", "test")

Sentence = List[str]

_ARCHAIC = {
    "æ": "ae",
    "Æ": "AE",
    "œ": "oe",
    "Œ": "OE",
    "ſ": "s",
}
_ARCHAIC_TABLE = str.maketrans(_ARCHAIC)

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "`": "'"})

# words may carry internal apostrophes/hyphens ("o'er", "well-a-day") and a
# leading elision apostrophe ("'tis"); everything else non-space is punctuation
_TOKEN_RE = re.compile(r"'?\w+(?:[-']\w+)*|\.\.\.|--|[^\w\s]")
_CLITIC_RE = re.compile(r"^(.+?)('ll|'ve|'re|'s|'d|'m)$")


def normalize_chars(text: str) -> str:
    """Replace archaic characters (æ, œ, long s) with their modern spellings."""
    return text.translate(_ARCHAIC_TABLE)


def _split_clitic(word: str) -> List[str]:
    if word.endswith("n't") and len(word) > 3:
        return [word[:-3], "n't"]
    m = _CLITIC_RE.match(word)
    if m:
        return [m.group(1), m.group(2)]
    return [word]


def tokenize(text: str) -> Sentence:
    """Lowercase and split ``text`` into word, clitic and punctuation tokens.

    >>> tokenize("I'll descend.")
    ['i', "'ll", 'descend', '.']
    """
    text = text.translate(_APOSTROPHES).lower()
    tokens: Sentence = []
    for tok in _TOKEN_RE.findall(text):
        if tok[0].isalnum() or tok[0] == "_" or (tok[0] == "'" and len(tok) > 1):
            tokens.extend(_split_clitic(tok))
        else:
            tokens.append(tok)
    return tokens


def preprocess(text: str) -> Sentence:
    return tokenize(normalize_chars(text))


# ---------------------------------------------------------------------------
# Corpus
# ---------------------------------------------------------------------------

@dataclass
class ParallelCorpus:
    """Index-aligned (source, target) sentence pairs of one split.

    Source is the Modern side, target the Original (Shakespearean) side.
    """

    pairs: List[Tuple[Sentence, Sentence]]
    split_tag: str = "train"
    dropped: int = 0

    def __post_init__(self):
        if self.split_tag not in SPLITS:
            raise ValueError(f"unknown split tag {self.split_tag!r}")
        for k, (s, t) in enumerate(self.pairs):
            if not s or not t:
                raise ValueError(f"pair {k} has an empty side")

    def __len__(self):
        return len(self.pairs)

    @property
    def sources(self) -> List[Sentence]:
        return [s for s, _ in self.pairs]

    @property
    def targets(self) -> List[Sentence]:
        return [t for _, t in self.pairs]

    def __eq__(self, other):
        if not isinstance(other, ParallelCorpus):
            return NotImplemented
        return self.split_tag == other.split_tag and self.pairs == other.pairs


def split_paths(data_dir, split: str) -> Tuple[Path, Path]:
    d = Path(data_dir)
    return d / f"{split}.modern.txt", d / f"{split}.original.txt"


def _read_lines(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text:
        return []
    lines = text.split("\n")
    if text.endswith("\n"):
        lines.pop()
    return lines


def load_parallel(source_path, target_path, split_tag: str) -> ParallelCorpus:
    """Load two line-aligned files.  Pairs with an empty side are dropped and counted."""
    src_lines = _read_lines(source_path)
    tgt_lines = _read_lines(target_path)
    if len(src_lines) != len(tgt_lines):
        raise ValueError(f"line count mismatch {len(src_lines)} vs {len(tgt_lines)}")
    pairs = []
    dropped = 0
    for s, t in zip(src_lines, tgt_lines):
        ss, tt = preprocess(s), preprocess(t)
        if ss and tt:
            pairs.append((ss, tt))
        else:
            dropped += 1
    if dropped:
        logger.warning("%s: dropped %d pair(s) with an empty side", split_tag, dropped)
    return ParallelCorpus(pairs, split_tag, dropped)


def load_split(data_dir, split: str) -> ParallelCorpus:
    src, tgt = split_paths(data_dir, split)
    return load_parallel(src, tgt, split)


def write_parallel(corpus: ParallelCorpus, source_path, target_path) -> None:
    with open(source_path, "w", encoding="utf-8", newline="\n") as fs, \
            open(target_path, "w", encoding="utf-8", newline="\n") as ft:
        for s, t in corpus.pairs:
            fs.write(" ".join(s) + "\n")
            ft.write(" ".join(t) + "\n")


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------

@dataclass
class Vocabulary:
    tokens: List[str]
    ids: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ValueError("vocabulary must start with the four special symbols")
        self.ids = {t: i for i, t in enumerate(self.tokens)}
        if len(self.ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.ids

    def id(self, token: str) -> int:
        return self.ids.get(token, UNK_ID)

    def encode(self, sentence: Iterable[str]) -> List[int]:
        return [self.ids.get(t, UNK_ID) for t in sentence]

    def decode(self, ids: Iterable[int]) -> Sentence:
        return [self.tokens[i] for i in ids]

    @property
    def fingerprint(self) -> str:
        return hashlib.sha256("\n".join(self.tokens).encode("utf-8")).hexdigest()[:16]

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t in self.tokens:
                fh.write(t + "\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh if line.rstrip("\n")])


def build_vocab(corpus: ParallelCorpus) -> Vocabulary:
    """Union of source and target types: specials, then by descending frequency."""
    if len(corpus) == 0:
        raise ValueError("empty training corpus")
    counts: Counter = Counter()
    for s, t in corpus.pairs:
        counts.update(s)
        counts.update(t)
    for sp in SPECIALS:
        counts.pop(sp, None)
    ordered = sorted(counts, key=lambda w: (-counts[w], w))
    return Vocabulary(list(SPECIALS) + ordered)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

@dataclass
class SideStats:
    token_count: int
    type_count: int
    avg_sentence_length: float
    type_entropy: float


@dataclass
class CorpusStats:
    source: SideStats
    target: SideStats
    shared_type_count: int
    union_type_count: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = []
        for side in ("source", "target"):
            for k, v in asdict(getattr(self, side)).items():
                lines.append(f"{side}.{k}={v:.6g}" if isinstance(v, float) else f"{side}.{k}={v}")
        lines.append(f"shared_type_count={self.shared_type_count}")
        lines.append(f"union_type_count={self.union_type_count}")
        return "\n".join(lines)


def entropy(counts: Iterable[int]) -> float:
    """Shannon entropy in nats of the distribution proportional to ``counts``."""
    counts = [c for c in counts if c > 0]
    n = sum(counts)
    return -sum(c / n * math.log(c / n) for c in counts) if n else 0.0


def _side_stats(sentences: Sequence[Sentence]) -> Tuple[SideStats, Counter]:
    counts = Counter(tok for s in sentences for tok in s)
    n = sum(counts.values())
    return SideStats(n, len(counts), n / len(sentences), max(0.0, entropy(counts.values()))), counts


def corpus_stats(corpus: ParallelCorpus) -> CorpusStats:
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    src, sc = _side_stats(corpus.sources)
    tgt, tc = _side_stats(corpus.targets)
    return CorpusStats(src, tgt, len(sc.keys() & tc.keys()), len(sc.keys() | tc.keys()))
