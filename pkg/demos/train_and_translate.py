"""Train a small Copy model on the toy corpus, translate the test split, and
show where the decoder looked for one sentence.

    python demos/train_and_translate.py [--epochs 30]
"""

import argparse

from bardic.decode import attention_tsv, translate, unk_replace
from bardic.metrics import bleu
from bardic.model import ModelConfig
from bardic.textcore import build_vocab, load_split
from bardic.toy import DATA_DIR
from bardic.train import TrainConfig, train_model


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--epochs", type=int, default=30)
    ap.add_argument("--dim", type=int, default=64)
    args = ap.parse_args()

    train, valid, test = (load_split(DATA_DIR, s) for s in ("train", "valid", "test"))
    vocab = build_vocab(train)
    cfg = ModelConfig(vocab_size=len(vocab), embed_dim=args.dim, hidden_dim=args.dim, share_embeddings=True)
    tcfg = TrainConfig(epochs=args.epochs, batch_size=16, lr=0.003)
    ckpt = train_model(train, valid, cfg, tcfg, vocab,
                       on_epoch=lambda r, _: print(f"epoch {r.epoch:3d} loss {r.train_loss:7.3f} "
                                                   f"valid BLEU {r.valid_bleu:6.2f}"))
    print(f"best epoch {ckpt.epoch}")

    results = translate(test.sources, ckpt.params, cfg, vocab)
    hyps = [unk_replace(r, s) for r, s in zip(results, test.sources)]
    print(f"test BLEU {bleu(hyps, test.targets).bleu:.2f}\n")
    for s, h, t in list(zip(test.sources, hyps, test.targets))[:5]:
        print("modern  :", " ".join(s))
        print("output  :", " ".join(h))
        print("original:", " ".join(t), "\n")

    print("attention for the first test sentence (rows: emitted words, last column: sentinel g)")
    print(attention_tsv(results[0], test.sources[0], vocab))


if __name__ == "__main__":
    main()
