import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bardic.lexicon import (SECOND_PERSON, Lexicon, RetrofitProblem, dictionary_translate,
                            lexicon_constraints, load_lexicon, retrofit, retrofit_objective)
from bardic.tensor import make_rng
from bardic.textcore import Vocabulary, SPECIALS


def write(tmp_path, text):
    p = tmp_path / "lex.tsv"
    p.write_text(text, encoding="utf-8")
    return p


def test_load_lexicon_augments(tmp_path):
    lex = load_lexicon(write(tmp_path, "# header\ncommend\trecommend\n\n"))
    assert lex.pairs[0] == ("commend", "recommend")
    assert lex.loaded_count == 1 and len(lex) == 1 + len(SECOND_PERSON)
    assert lex.augmented_count == len(lex)
    assert set(SECOND_PERSON) <= set(lex.pairs)


def test_load_lexicon_dedup_and_normalize(tmp_path):
    lex = load_lexicon(write(tmp_path, "thou\tyou\nThou\tYou\nCæsar\tcaesar\n"))
    assert lex.pairs.count(("thou", "you")) == 1
    assert ("caesar", "caesar") in lex.pairs
    assert lex.loaded_count == 2
    assert len(load_lexicon(write(tmp_path, "thou\tyou\n"), augment=False)) == 1


def test_load_lexicon_errors(tmp_path, caplog):
    with pytest.raises(ValueError, match=":2: expected 2"):
        load_lexicon(write(tmp_path, "a\tb\nbroken line\n"))
    lex = load_lexicon(write(tmp_path, "'tis\tit is\nere\tbefore\n"))
    assert lex.loaded_count == 1 and "skipped 1" in caplog.text


def test_dictionary_translate():
    lex = Lexicon([("thou", "you"), ("thee", "you")])
    freq = {"thou": 500, "thee": 300}
    assert dictionary_translate([], lex, freq) == []
    assert dictionary_translate(["no", "hits"], lex, freq) == ["no", "hits"]
    assert dictionary_translate(["you", "are", "here"], lex, freq) == ["thou", "are", "here"]
    assert dictionary_translate(["you"], lex, {"thee": 9}) == ["thee"]
    assert dictionary_translate(["you"], lex, {}) == ["thee"]         # tie -> lexicographic


def test_retrofit_no_constraints_and_zero_iterations():
    P = make_rng(0, "P").normal(size=(4, 3))
    np.testing.assert_array_equal(retrofit(RetrofitProblem(P, [])), P)
    np.testing.assert_array_equal(retrofit(RetrofitProblem(P, [(0, 1)], iterations=0)), P)


def test_retrofit_one_dimensional_example():
    Q = retrofit(RetrofitProblem(np.array([[0.0], [1.0]]), [(0, 1)], delta=1.0, omega=1.0, iterations=60))
    np.testing.assert_allclose(Q[:, 0], [1 / 3, 2 / 3], atol=1e-12)
    Q = retrofit(RetrofitProblem(np.array([[0.0], [1.0]]), [(0, 1)], iterations=60))
    np.testing.assert_allclose(Q[:, 0], [1 / 3, 2 / 3], atol=1e-12)


def test_retrofit_validation():
    with pytest.raises(ValueError):
        RetrofitProblem(np.array([[np.nan]]), [])
    with pytest.raises(ValueError):
        RetrofitProblem(np.zeros((2, 1)), [(0, 5)])
    with pytest.raises(ValueError):
        RetrofitProblem(np.zeros((2, 1)), [], delta=0)
    with pytest.raises(ValueError):
        RetrofitProblem(np.zeros((2, 1)), [], omega=-1.0)


def random_problem(seed, omega="degree"):
    rng = make_rng(seed, "retro")
    n = int(rng.integers(2, 7))
    P = rng.normal(size=(n, 3))
    C = [tuple(int(x) for x in rng.integers(0, n, 2)) for _ in range(int(rng.integers(0, 6)))]
    return RetrofitProblem(P, C, delta=float(rng.uniform(0.2, 3)), omega=omega)


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6), st.sampled_from(["degree", 0.5, 2.0]))
def test_retrofit_objective_monotone(seed, omega):
    prob = random_problem(seed, omega)
    prev = retrofit_objective(prob, prob.P)
    for it in range(1, 8):
        prob.iterations = it
        f = retrofit_objective(prob, retrofit(prob))
        assert f <= prev + 1e-12
        prev = f


@settings(max_examples=40)
@given(st.integers(0, 10 ** 6))
def test_retrofit_symmetric_constraints(seed):
    prob = random_problem(seed)
    flipped = RetrofitProblem(prob.P, [(j, i) for i, j in prob.constraints], prob.delta)
    np.testing.assert_array_equal(retrofit(prob), retrofit(flipped))


def test_retrofit_large_delta_stays_put():
    P = make_rng(3, "P").normal(size=(3, 2))
    for delta in (1e3, 1e6):
        Q = retrofit(RetrofitProblem(P, [(0, 1), (1, 2)], delta=delta, omega=1.0))
        assert np.max(np.abs(Q - P)) < 10 / delta


def test_retrofit_clique_moves_toward_mean():
    P = make_rng(4, "P").normal(size=(4, 2))
    Q = retrofit(RetrofitProblem(P, [(0, 1), (0, 2), (1, 2)], iterations=1))
    mean = P[:3].mean(axis=0)
    for i in range(3):
        assert np.linalg.norm(Q[i] - mean) < np.linalg.norm(P[i] - mean)
    np.testing.assert_array_equal(Q[3], P[3])


def test_lexicon_constraints_skip_oov():
    vocab = Vocabulary(list(SPECIALS) + ["thou", "you", "art"])
    lex = Lexicon([("thou", "you"), ("art", "are"), ("you", "you")])
    assert lexicon_constraints(lex, vocab) == [(4, 5)]
