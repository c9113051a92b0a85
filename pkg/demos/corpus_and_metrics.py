"""Tokenize the bundled toy corpus, print its statistics and score the two
non-neural baselines with BLEU and PINC.

    python demos/corpus_and_metrics.py
"""

from bardic.baselines import as_it_is, dictionary_baseline, target_frequencies
from bardic.lexicon import load_lexicon
from bardic.metrics import bleu, pinc
from bardic.textcore import corpus_stats, load_split, preprocess
from bardic.toy import DATA_DIR


def main():
    print("tokenizer:", preprocess("Where art thou, Cæsar? I'll not go."))

    train = load_split(DATA_DIR, "train")
    print("\ntraining split statistics")
    print(corpus_stats(train).to_text())

    test = load_split(DATA_DIR, "test")
    lexicon = load_lexicon(DATA_DIR / "lexicon.tsv")
    systems = {
        "as-it-is": [as_it_is(s) for s in test.sources],
        "dictionary": dictionary_baseline(test.sources, lexicon, target_frequencies(train)),
    }
    print()
    for name, out in systems.items():
        b = bleu(out, test.targets)
        p = pinc(test.sources, out)
        print(f"{name:10s}  BLEU {b.bleu:6.2f}  PINC {p.pinc:6.2f}")
    print("\nexample:", " ".join(test.sources[0]), "->", " ".join(systems["dictionary"][0]))


if __name__ == "__main__":
    main()
