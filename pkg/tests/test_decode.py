import numpy as np
import pytest

from bardic.decode import (DecodeResult, attention_tsv, greedy_decode, greedy_decode_batch,
                           max_length, translate, unk_replace, unk_replacements_json)
from bardic.model import ModelConfig, init_params
from bardic.textcore import (SPECIALS, START_ID, STOP, STOP_ID, UNK, ParallelCorpus, Vocabulary,
                             build_vocab)
from bardic.train import TrainConfig, train_model

VOCAB = Vocabulary(list(SPECIALS) + ["thou", "art", "romeo", "my", "friend"])


class Model:
    def __init__(self, params, config, vocab=VOCAB):
        self.params, self.config, self.vocab = params, config, vocab


def rigged(favourite: int, copy: bool = True) -> Model:
    cfg = ModelConfig(vocab_size=len(VOCAB), embed_dim=4, hidden_dim=4, copy_enabled=copy)
    p = init_params(cfg, seed=0)
    p["W_out"][:] = 0.0
    p["b_out"][:] = -20.0
    p["b_out"][favourite] = 20.0
    p["b_sent"][0] = 50.0      # sentinel takes all attention mass, so P is P_lstm
    return Model(p, cfg)


def test_max_length_policy():
    assert max_length(10) == 20
    assert max_length(1) == 7
    assert max_length(3) == 10
    assert max_length(200) == 100


def test_rigged_stop_gives_empty_output():
    res = greedy_decode(["thou", "art"], rigged(STOP_ID))
    assert res.tokens == []
    assert res.ids == [STOP_ID]
    assert len(res.betas) == len(res.gates) == 1


def test_rigged_never_stop_hits_cap():
    src = ["thou"] * 10
    res = greedy_decode(src, rigged(VOCAB.id("romeo")))
    assert len(res.tokens) == 20
    assert res.tokens == ["romeo"] * 20
    assert STOP_ID not in res.ids


def test_pad_and_start_never_emitted():
    m = rigged(START_ID)
    m.params["b_out"][0] = 30.0     # PAD
    res = greedy_decode(["thou"], m)
    assert all(i not in (0, START_ID) for i in res.ids)


def test_beta_rows_sum_to_one_minus_g():
    cfg = ModelConfig(vocab_size=len(VOCAB), embed_dim=4, hidden_dim=4)
    m = Model(init_params(cfg, seed=3, scale=1.0), cfg)
    res = greedy_decode(["romeo", "art", "my", "friend"], m)
    assert len(res.betas) == len(res.ids)
    for beta, g in zip(res.betas, res.gates):
        assert beta.shape == (4,)
        assert beta.sum() == pytest.approx(1.0 - g, abs=1e-9)


def test_decode_deterministic_and_batch_independent():
    cfg = ModelConfig(vocab_size=len(VOCAB), embed_dim=4, hidden_dim=4)
    p = init_params(cfg, seed=4, scale=1.0)
    sources = [["thou"], ["romeo", "art", "my", "friend", "zounds"], ["my", "friend"]]
    a = greedy_decode_batch(sources, p, cfg, VOCAB)
    b = translate(sources, p, cfg, VOCAB, batch_size=1)
    for x, y in zip(a, b):
        assert x.ids == y.ids
        for u, v in zip(x.betas, y.betas):
            np.testing.assert_allclose(u, v, atol=1e-12)
    c = greedy_decode_batch(sources, p, cfg, VOCAB)
    assert [r.ids for r in a] == [r.ids for r in c]


def test_empty_source_rejected():
    cfg = ModelConfig(vocab_size=len(VOCAB), embed_dim=4, hidden_dim=4)
    with pytest.raises(ValueError):
        greedy_decode_batch([[]], init_params(cfg), cfg, VOCAB)


def result(tokens, betas):
    ids = [VOCAB.id(t) for t in tokens] + [STOP_ID]
    betas = [np.asarray(b, dtype=float) for b in betas]
    return DecodeResult(list(tokens), ids, betas + [betas[-1]], [0.0] * len(ids))


def test_unk_replace_without_unk_is_identity():
    r = result(["thou", "art"], [[1, 0], [0, 1]])
    assert unk_replace(r, ["you", "are"]) == ["thou", "art"]


def test_unk_replace_uses_peak_attention():
    src = ["romeo", ",", "you", "are", "sweet", "!"]
    peaked = [0.0, 0.05, 0.05, 0.1, 0.7, 0.1]
    r = result(["thou", UNK, "art"], [[1, 0, 0, 0, 0, 0], peaked, [0, 0, 0, 1, 0, 0]])
    out = unk_replace(r, src)
    assert out == ["thou", "sweet", "art"]
    assert r.unk_replacements == [(1, 4)]
    assert UNK not in out
    assert len(out) == len(r.tokens)


def test_unk_replace_tie_goes_leftmost():
    r = result([UNK, UNK], [[0.5, 0.5], [0.2, 0.8]])
    assert unk_replace(r, ["a", "b"]) == ["a", "b"]


def test_attention_tsv_and_json():
    r = result([UNK, "art"], [[0.25, 0.5], [0.0, 0.75]])
    r.gates = [0.25, 0.25, 0.25]
    tsv = attention_tsv(r, ["you", "are"], VOCAB).splitlines()
    assert tsv[0] == "step\tyou\tare\t<sentinel>"
    assert tsv[1] == f"{UNK}\t0.250000\t0.500000\t0.250000"
    assert tsv[-1].startswith(STOP + "\t")
    assert len(tsv) == 4
    assert unk_replacements_json([r]) == "[[[0, 1]]]"


def test_overfit_single_pair_decodes_target():
    # the first target word is not in the source: at step one attention is
    # content-blind, so a copyable first word can stall on a uniform pointer
    src, tgt = "do you know romeo ?".split(), "dost thou know romeo ?".split()
    corpus = ParallelCorpus([(src, tgt)] * 8, "train")
    vocab = build_vocab(corpus)
    cfg = ModelConfig(vocab_size=len(vocab), embed_dim=16, hidden_dim=16)
    ck = train_model(corpus, None, cfg, TrainConfig(batch_size=8, epochs=200), vocab)
    assert greedy_decode(src, ck).tokens == tgt
