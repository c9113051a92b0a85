"""Non-neural reference systems."""

from __future__ import annotations

from collections import Counter
from typing import List, Sequence

from .lexicon import Lexicon, dictionary_translate
from .textcore import ParallelCorpus, Sentence


def as_it_is(source: Sequence[str]) -> Sentence:
    return list(source)


def target_frequencies(train: ParallelCorpus) -> Counter:
    return Counter(tok for t in train.targets for tok in t)


def dictionary_baseline(sources: Sequence[Sentence], lexicon: Lexicon, target_freq) -> List[Sentence]:
    """Word-by-word lexicon replacement of every source sentence."""
    return [dictionary_translate(s, lexicon, target_freq) for s in sources]
