from collections import Counter

from hypothesis import given
from hypothesis import strategies as st

from bardic.baselines import as_it_is, dictionary_baseline, target_frequencies
from bardic.lexicon import Lexicon
from bardic.metrics import pinc
from bardic.textcore import ParallelCorpus

LEX = Lexicon([("thou", "you"), ("thee", "you"), ("art", "are"), ("ere", "before")])


def test_as_it_is():
    assert as_it_is(["a", "b", "c"]) == ["a", "b", "c"]
    assert as_it_is([]) == []


def test_target_frequencies():
    train = ParallelCorpus([(["you"], ["thou", "art"]), (["x"], ["thou"])], "train")
    assert target_frequencies(train) == Counter({"thou": 2, "art": 1})


def test_dictionary_baseline():
    srcs = [["you", "are", "here"], ["nothing", "matches"]]
    out = dictionary_baseline(srcs, LEX, Counter({"thee": 3, "thou": 1}))
    assert out == [["thee", "art", "here"], ["nothing", "matches"]]
    assert dictionary_baseline([["no", "hits"]], LEX, {}) == [as_it_is(["no", "hits"])]


sentences = st.lists(st.lists(st.sampled_from(["you", "are", "before", "x", "y"]), max_size=7),
                     min_size=1, max_size=5)


@given(sentences)
def test_baseline_properties(srcs):
    out = dictionary_baseline(srcs, LEX, {})
    assert [len(s) for s in out] == [len(s) for s in srcs]
    assert pinc(srcs, [as_it_is(s) for s in srcs]).pinc == 0.0
