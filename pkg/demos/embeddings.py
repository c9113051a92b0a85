"""Pretrain skip-gram embeddings on the toy corpus, then retrofit them to the
archaic/modern lexicon and watch linked pairs move closer.

    python demos/embeddings.py
"""

import numpy as np

from bardic.embed import EmbedStrategy, SgnsConfig, build_embeddings, retrofit_embeddings
from bardic.lexicon import load_lexicon
from bardic.textcore import build_vocab, load_split
from bardic.toy import DATA_DIR


def cosine(u, v):
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)))


def main():
    train = load_split(DATA_DIR, "train")
    vocab = build_vocab(train)
    lexicon = load_lexicon(DATA_DIR / "lexicon.tsv")
    plain = build_embeddings(EmbedStrategy("plain", sgns=SgnsConfig(dim=32, epochs=5)), train, None, vocab)
    retro = retrofit_embeddings(plain, lexicon, vocab)
    print(f"{'original':10s} {'modern':10s} {'plain':>7s} {'retro':>7s}")
    for orig, mod in lexicon.pairs:
        if orig in vocab and mod in vocab:
            i, j = vocab.id(orig), vocab.id(mod)
            print(f"{orig:10s} {mod:10s} {cosine(plain.rows[i], plain.rows[j]):7.3f} "
                  f"{cosine(retro.rows[i], retro.rows[j]):7.3f}")


if __name__ == "__main__":
    main()
