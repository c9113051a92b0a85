import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bardic.textcore import (PAD, SPECIALS, START, STOP, UNK, ParallelCorpus, Vocabulary, build_vocab,
                             corpus_stats, entropy, load_parallel, normalize_chars, preprocess,
                             tokenize, write_parallel)


def corpus(*pairs, split="train"):
    return ParallelCorpus([(s.split(), t.split()) for s, t in pairs], split)


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def test_normalize_chars():
    assert normalize_chars("Fie, how my bones ache!") == "Fie, how my bones ache!"
    assert normalize_chars("æther") == "aether"
    assert normalize_chars("Cæsar's ſon") == "Caesar's son"
    assert normalize_chars("Œdipus œuvre Æ") == "OEdipus oeuvre AE"


def test_tokenize_examples():
    assert tokenize("Holy Saint Francis, this is a drastic change!") == [
        "holy", "saint", "francis", ",", "this", "is", "a", "drastic", "change", "!"]
    assert tokenize("") == []
    assert tokenize("   \t ") == []
    assert tokenize("I'll descend.") == ["i", "'ll", "descend", "."]


def test_tokenize_contractions_and_punctuation():
    assert tokenize("Don't you've they're he's I'd I'm") == [
        "do", "n't", "you", "'ve", "they", "'re", "he", "'s", "i", "'d", "i", "'m"]
    assert tokenize("'Tis well... -- so") == ["'tis", "well", "...", "--", "so"]
    assert tokenize("O Romeo’s ring") == ["o", "romeo", "'s", "ring"]


@given(st.text(max_size=60))
def test_tokenize_invariants(text):
    toks = preprocess(text)
    assert toks == preprocess(text)
    for t in toks:
        assert t and not any(c.isspace() for c in t)
        assert not set(t) & set("æÆœŒſ")


@given(st.text(alphabet="abcdef ,.!'", max_size=40))
def test_tokenize_is_idempotent_on_joined_output(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks


def test_build_vocab():
    v = build_vocab(corpus(("a b", "b c")))
    assert v.tokens[:4] == [PAD, START, STOP, UNK]
    assert v.tokens[4:] == ["b", "a", "c"]      # b twice, then a < c
    assert len(build_vocab(corpus(("x", "x")))) == 5
    with pytest.raises(ValueError, match="empty training corpus"):
        build_vocab(ParallelCorpus([], "train"))


def test_vocab_ids_and_roundtrip(tmp_path):
    v = build_vocab(corpus(("the cat", "the dog"), ("a cat", "the")))
    assert [v.id(s) for s in SPECIALS] == [0, 1, 2, 3]
    assert v.encode(["the", "zebra"]) == [v.id("the"), 3]
    assert sorted(v.ids.values()) == list(range(len(v)))
    v.save(tmp_path / "v.txt")
    w = Vocabulary.load(tmp_path / "v.txt")
    assert w.tokens == v.tokens and w.fingerprint == v.fingerprint
    with pytest.raises(ValueError):
        Vocabulary(["a", "b"])


def test_corpus_stats_examples():
    s = corpus_stats(corpus(("a a", "b")))
    assert s.source.avg_sentence_length == 2
    assert s.source.type_entropy == 0
    s = corpus_stats(corpus(("a b", "c")))
    assert s.source.type_entropy == pytest.approx(math.log(2), abs=1e-15)
    assert entropy([5, 5]) == pytest.approx(math.log(2))


def test_corpus_stats_type_accounting():
    c = corpus(("a b c d", "c d e"), ("a f", "g e e"))
    s = corpus_stats(c)
    src = {t for x in c.sources for t in x}
    tgt = {t for x in c.targets for t in x}
    assert s.shared_type_count == len(src & tgt)
    assert s.shared_type_count + len(src - tgt) + len(tgt - src) == s.union_type_count
    assert s.shared_type_count <= min(s.source.type_count, s.target.type_count)
    assert s.source.token_count == 6 and s.target.token_count == 6
    assert json.loads(s.to_json())["union_type_count"] == 7
    assert "shared_type_count=2" in s.to_text()      # a and e


def test_load_parallel(tmp_path, caplog):
    a, b = tmp_path / "a", tmp_path / "b"
    write_lines(a, ["Hello there.", "Cæsar comes"])
    write_lines(b, ["Good morrow.", "Caesar cometh"])
    c = load_parallel(a, b, "valid")
    assert len(c) == 2 and c.split_tag == "valid"
    assert c.sources[1] == ["caesar", "comes"]

    write_lines(a, [f"s{i}" for i in range(10)])
    write_lines(b, [f"t{i}" for i in range(9)])
    with pytest.raises(ValueError, match="line count mismatch 10 vs 9"):
        load_parallel(a, b, "train")

    write_lines(a, ["one", "two", "", "four", "five"])
    write_lines(b, ["1", "2", "3", "4", "5"])
    c = load_parallel(a, b, "train")
    assert len(c) == 4 and c.dropped == 1
    assert "dropped 1" in caplog.text

    with pytest.raises(OSError):
        load_parallel(tmp_path / "missing", b, "train")


def test_parallel_corpus_invariants():
    with pytest.raises(ValueError):
        ParallelCorpus([(["a"], [])], "train")
    with pytest.raises(ValueError):
        ParallelCorpus([], "dev")


def test_write_reload_roundtrip(tmp_path):
    c = corpus(("i 'll go .", "i will hence ."), ("do n't", "do not"), split="test")
    write_parallel(c, tmp_path / "s", tmp_path / "t")
    assert load_parallel(tmp_path / "s", tmp_path / "t", "test") == c
