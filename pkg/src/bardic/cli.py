"""Command-line entry point: ``bardic <command> [options]``.

Exit status is 0 on success, 1 on a usage error and 2 on a data or
configuration error.  Every run writes one JSON manifest.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional

from threadpoolctl import threadpool_limits

from . import __version__
from .baselines import as_it_is, dictionary_baseline
from .decode import (attention_tsv, translate, unk_replace, unk_replacements_json,
                     write_translations)
from .embed import (STRATEGIES, EmbedStrategy, SgnsConfig, build_embeddings, load_embeddings,
                    read_embeddings, save_embeddings)
from .lexicon import RetrofitProblem, load_lexicon, retrofit
from .metrics import bleu, pinc
from .model import SIZE_PRESETS, ModelConfig, count_params
from .toy import DATA_DIR as TOY_DIR
from .train import CheckpointError, TrainConfig, load_checkpoint, save_checkpoint, train_model
from .textcore import SPLITS, build_vocab, corpus_stats, load_split, preprocess, split_paths, write_parallel

logger = logging.getLogger("bardic")

TOY_ALIAS = "@toy"

# built-in defaults per command; flags and config files override these
DEFAULTS: Dict[str, dict] = {
    "preprocess": {},
    "stats": {"split": "train", "json": False},
    "embed": {"strategy": "plain", "external": None, "lexicon": None, "dim": 192, "window": 5,
              "negatives": 5, "sgns_epochs": 5, "seed": 0, "retrofit_iterations": 10, "delta": 1.0},
    "retrofit": {"iterations": 10, "delta": 1.0},
    "train": {"size": "ME", "embed_dim": None, "hidden_dim": None, "share": False, "fixed": False,
              "copy": True, "sentinel_loss": False, "seed": 0, "epochs": 15, "batch_size": 32,
              "lr": 0.001, "beta1": 0.9, "beta2": 0.999, "epsilon": 1e-8, "clip_norm": 5.0,
              "embed": None, "embed_strategy": "none", "external": None, "lexicon": None,
              "sgns_epochs": 5, "window": 5, "negatives": 5},
    "translate": {"unk_replace": "on", "dump_attention": None, "unk_json": None, "batch_size": 64},
    "score": {"hyp": None, "ref": None, "src": None, "json": False},
    "baseline": {"lexicon": None, "train_target": None},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise UsageError(message)


def _file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _data_dir(value: str) -> Path:
    return TOY_DIR if value == TOY_ALIAS else Path(value)


class Run:
    """Collects what goes into the manifest of one invocation."""

    def __init__(self, command: str, argv: List[str], config: dict):
        self.command = command
        self.argv = list(argv)
        self.config = config
        self.inputs: Dict[str, str] = {}
        self.outputs: List[str] = []
        self.metrics: dict = {}
        self.notes: dict = {}
        self.seeds: dict = {}
        self.t0 = time.time()
        self.clock = time.perf_counter()

    def add_input(self, path) -> None:
        if path is not None and Path(path).is_file():
            self.inputs[str(path)] = _file_hash(path)

    def manifest(self, status: str, error: Optional[str] = None) -> dict:
        return {
            "command": self.command,
            "argv": self.argv,
            "version": __version__,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "metrics": self.metrics,
            "notes": self.notes,
            "status": status,
            "error": error,
            "timings": {"started": self.t0, "seconds": time.perf_counter() - self.clock},
        }


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    # global options are accepted before or after the command name
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--threads", type=int, help="BLAS threads (default: $BARDIC_THREADS or 1)")
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--manifest", help="where to write the run manifest")
    common.add_argument("-v", "--verbose", action="store_true")
    p = _Parser(prog="bardic", description="Modern to Shakespearean English style transfer.",
                parents=[common])
    p.add_argument("--version", action="version", version=f"bardic {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True,
                           parser_class=_Parser)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **kw: _add(*a, parents=[common], **kw)

    c = sub.add_parser("preprocess", help="tokenize raw splits, build vocabulary and stats",
                       argument_default=S)
    c.add_argument("--data-dir", required=True, help=f"raw split directory ({TOY_ALIAS} for the bundled toy set)")
    c.add_argument("--out", required=True, help="output directory")

    c = sub.add_parser("stats", help="corpus statistics of one split", argument_default=S)
    c.add_argument("--data-dir", required=True)
    c.add_argument("--split", choices=SPLITS)
    c.add_argument("--json", action="store_true", help="print JSON instead of key=value")

    c = sub.add_parser("embed", help="pretrain embeddings for the training vocabulary",
                       argument_default=S)
    c.add_argument("--data-dir", required=True)
    c.add_argument("--strategy", choices=STRATEGIES)
    c.add_argument("--external", help="auxiliary plain-text corpus for *ext strategies")
    c.add_argument("--lexicon", help="lexicon TSV for retro strategies")
    c.add_argument("--dim", type=int)
    c.add_argument("--window", type=int)
    c.add_argument("--negatives", type=int)
    c.add_argument("--sgns-epochs", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--retrofit-iterations", type=int)
    c.add_argument("--delta", type=float)
    c.add_argument("--out", required=True, help="embedding file to write")

    c = sub.add_parser("retrofit", help="retrofit an embedding file to a lexicon", argument_default=S)
    c.add_argument("--embed", required=True, help="input embedding file")
    c.add_argument("--lexicon", required=True)
    c.add_argument("--iterations", type=int)
    c.add_argument("--delta", type=float)
    c.add_argument("--out", required=True)

    c = sub.add_parser("train", help="train a model and keep the best checkpoint", argument_default=S)
    c.add_argument("--data-dir", required=True)
    c.add_argument("--out-dir", required=True)
    c.add_argument("--size", choices=sorted(SIZE_PRESETS))
    c.add_argument("--embed-dim", type=int, help="override the preset embedding size")
    c.add_argument("--hidden-dim", type=int, help="override the preset hidden size")
    c.add_argument("--share", action="store_true", help="one embedding matrix for both sides")
    c.add_argument("--fixed", action="store_true", help="freeze the embeddings")
    c.add_argument("--copy", action=argparse.BooleanOptionalAction, help="pointer branch on/off")
    c.add_argument("--sentinel-loss", action="store_true")
    c.add_argument("--seed", type=int)
    c.add_argument("--epochs", type=int)
    c.add_argument("--batch-size", type=int)
    c.add_argument("--lr", type=float)
    c.add_argument("--beta1", type=float)
    c.add_argument("--beta2", type=float)
    c.add_argument("--epsilon", type=float)
    c.add_argument("--clip-norm", type=float, help="global-norm clip, 0 disables")
    c.add_argument("--embed", help="pretrained embedding file (overrides --embed-strategy)")
    c.add_argument("--embed-strategy", choices=STRATEGIES)
    c.add_argument("--external")
    c.add_argument("--lexicon")
    c.add_argument("--sgns-epochs", type=int)
    c.add_argument("--window", type=int)
    c.add_argument("--negatives", type=int)

    c = sub.add_parser("translate", help="greedy-decode a source file", argument_default=S)
    c.add_argument("--ckpt", required=True)
    c.add_argument("--src", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--unk-replace", choices=("on", "off"))
    c.add_argument("--dump-attention", metavar="DIR", help="write one attention TSV per sentence")
    c.add_argument("--unk-json", help="write the UNK alignment positions as JSON")
    c.add_argument("--batch-size", type=int)

    c = sub.add_parser("score", help="BLEU or PINC of a hypothesis file", argument_default=S)
    c.add_argument("metric", choices=("bleu", "pinc"))
    c.add_argument("--hyp", required=True)
    c.add_argument("--ref", help="reference file (bleu)")
    c.add_argument("--src", help="source file (pinc)")
    c.add_argument("--json", action="store_true")

    c = sub.add_parser("baseline", help="non-neural baselines", argument_default=S)
    c.add_argument("system", choices=("as-it-is", "dictionary"))
    c.add_argument("--src", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--lexicon", help="lexicon TSV (dictionary)")
    c.add_argument("--train-target", help="training Original side, for the frequency tie-break")
    return p


def resolve_config(command: str, explicit: dict, config_path: Optional[str]) -> dict:
    """Flag > config file > built-in default."""
    resolved = dict(DEFAULTS[command])
    if config_path:
        with open(config_path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{config_path}: expected a JSON object")
        section = data.get(command, data)
        if not isinstance(section, dict):
            raise ValueError(f"{config_path}: section {command!r} must be an object")
        section = {k.replace("-", "_"): v for k, v in section.items()
                   if not (k in DEFAULTS and isinstance(v, dict))}
        known = set(DEFAULTS[command]) | set(explicit)
        unknown = sorted(set(section) - known)
        if unknown:
            raise ValueError(f"{config_path}: unknown option(s) for {command}: {', '.join(unknown)}")
        resolved.update(section)
    resolved.update(explicit)
    return resolved


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _load_splits(data_dir: Path, run: Run, required=("train",)):
    out = {}
    for split in SPLITS:
        src, tgt = split_paths(data_dir, split)
        if not (src.is_file() and tgt.is_file()):
            if split in required:
                raise FileNotFoundError(f"missing {split} split in {data_dir}")
            continue
        run.add_input(src)
        run.add_input(tgt)
        corpus = load_split(data_dir, split)
        if corpus.dropped:
            print(f"{split}: dropped {corpus.dropped} pair(s) with an empty side", file=sys.stderr)
        run.notes.setdefault("dropped_pairs", {})[split] = corpus.dropped
        out[split] = corpus
    return out


def cmd_preprocess(cfg: dict, run: Run) -> None:
    splits = _load_splits(_data_dir(cfg["data_dir"]), run)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    for split, corpus in splits.items():
        src, tgt = split_paths(out, split)
        write_parallel(corpus, src, tgt)
        run.outputs += [str(src), str(tgt)]
    lexicon = _data_dir(cfg["data_dir"]) / "lexicon.tsv"
    if lexicon.is_file():
        (out / "lexicon.tsv").write_bytes(lexicon.read_bytes())
        run.add_input(lexicon)
        run.outputs.append(str(out / "lexicon.tsv"))
    vocab = build_vocab(splits["train"])
    vocab.save(out / "vocab.txt")
    stats = corpus_stats(splits["train"])
    (out / "stats.txt").write_text(stats.to_text(), encoding="utf-8")
    (out / "stats.json").write_text(stats.to_json() + "\n", encoding="utf-8")
    run.outputs += [str(out / n) for n in ("vocab.txt", "stats.txt", "stats.json")]
    run.metrics = {"vocab_size": len(vocab), "pairs": {k: len(v) for k, v in splits.items()}}
    print(f"wrote {len(splits)} split(s), vocabulary of {len(vocab)} to {out}")


def cmd_stats(cfg: dict, run: Run) -> None:
    d = _data_dir(cfg["data_dir"])
    src, tgt = split_paths(d, cfg["split"])
    run.add_input(src)
    run.add_input(tgt)
    corpus = load_split(d, cfg["split"])
    stats = corpus_stats(corpus)
    run.metrics = stats.to_dict()
    print(stats.to_json() if cfg["json"] else stats.to_text(), end="" if not cfg["json"] else "\n")


def _strategy(cfg: dict, kind: str, dim: int) -> EmbedStrategy:
    sgns = SgnsConfig(dim=dim, window=cfg["window"], negatives=cfg["negatives"],
                      epochs=cfg["sgns_epochs"], seed=cfg["seed"])
    return EmbedStrategy(kind=kind, external_corpus=cfg["external"], sgns=sgns,
                         retrofit_iterations=cfg.get("retrofit_iterations", 10),
                         retrofit_delta=cfg.get("delta", 1.0))


def _lexicon_for(cfg: dict, kind: str, data_dir: Path, run: Run):
    path = cfg["lexicon"]
    if path is None and (data_dir / "lexicon.tsv").is_file():
        path = data_dir / "lexicon.tsv"
    if path is None:
        if kind.startswith("retro"):
            raise ValueError(f"strategy {kind!r} needs --lexicon")
        return None
    run.add_input(path)
    lex = load_lexicon(path)
    run.notes["lexicon"] = {"loaded": lex.loaded_count, "augmented": lex.augmented_count, "total": len(lex)}
    return lex


def cmd_embed(cfg: dict, run: Run) -> None:
    d = _data_dir(cfg["data_dir"])
    train = _load_splits(d, run)["train"]
    vocab = build_vocab(train)
    strategy = _strategy(cfg, cfg["strategy"], cfg["dim"])
    if strategy.external_corpus:
        run.add_input(strategy.external_corpus)
    lex = _lexicon_for(cfg, strategy.kind, d, run) if strategy.kind.startswith("retro") else None
    run.seeds["sgns"] = cfg["seed"]
    emb = build_embeddings(strategy, train, lex, vocab)
    save_embeddings(cfg["out"], emb, vocab)
    run.outputs.append(str(cfg["out"]))
    run.notes["strategy"] = strategy.manifest()
    run.metrics = {"rows": len(emb), "dim": emb.dim, "vocab_fingerprint": vocab.fingerprint}
    print(f"wrote {len(emb)} x {emb.dim} embeddings ({strategy.kind}) to {cfg['out']}")


def cmd_retrofit(cfg: dict, run: Run) -> None:
    run.add_input(cfg["embed"])
    run.add_input(cfg["lexicon"])
    tokens, rows = read_embeddings(cfg["embed"])
    lex = load_lexicon(cfg["lexicon"])
    index = {t: k for k, t in enumerate(tokens)}
    constraints = [(index[o], index[m]) for o, m in lex.pairs if o in index and m in index and o != m]
    problem = RetrofitProblem(rows, constraints, delta=cfg["delta"], omega="degree",
                              iterations=cfg["iterations"])
    Q = retrofit(problem)
    with open(cfg["out"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(tokens)} {rows.shape[1]}\n")
        for tok, row in zip(tokens, Q):
            fh.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")
    run.outputs.append(str(cfg["out"]))
    run.metrics = {"constraints": len(constraints), "lexicon_pairs": len(lex)}
    print(f"retrofitted {len(tokens)} vectors with {len(constraints)} constraint(s) -> {cfg['out']}")


def cmd_train(cfg: dict, run: Run) -> None:
    d = _data_dir(cfg["data_dir"])
    splits = _load_splits(d, run)
    train, valid = splits["train"], splits.get("valid")
    vocab = build_vocab(train)
    M, H = SIZE_PRESETS[cfg["size"]]
    M = cfg["embed_dim"] or M
    H = cfg["hidden_dim"] or H
    kind = cfg["embed_strategy"]
    if cfg["fixed"] and cfg["embed"] is None and kind == "none":
        raise ValueError("--fixed needs pretrained embeddings: pass --embed FILE or an --embed-strategy other than none")
    mconf = ModelConfig(vocab_size=len(vocab), embed_dim=M, hidden_dim=H,
                        share_embeddings=cfg["share"], embeddings_fixed=cfg["fixed"],
                        copy_enabled=cfg["copy"], sentinel_loss_enabled=cfg["sentinel_loss"])
    tconf = TrainConfig(batch_size=cfg["batch_size"], epochs=cfg["epochs"], lr=cfg["lr"],
                        beta1=cfg["beta1"], beta2=cfg["beta2"], epsilon=cfg["epsilon"],
                        seed=cfg["seed"], clip_norm=cfg["clip_norm"] or None)
    run.seeds = {"init": cfg["seed"], "shuffle": cfg["seed"]}
    extra: dict = {"data_dir": str(d)}
    embeddings = None
    if cfg["embed"] is not None:
        run.add_input(cfg["embed"])
        embeddings = load_embeddings(cfg["embed"], vocab)
        if embeddings.dim != M:
            raise ValueError(f"embedding file has dim {embeddings.dim}, model expects {M}")
        extra["embedding"] = {"file": str(cfg["embed"])}
    elif kind != "none":
        strategy = _strategy(cfg, kind, M)
        if strategy.external_corpus:
            run.add_input(strategy.external_corpus)
        lex = _lexicon_for(cfg, kind, d, run) if kind.startswith("retro") else None
        embeddings = build_embeddings(strategy, train, lex, vocab)
        run.seeds["sgns"] = cfg["seed"]
        extra["embedding"] = {"strategy": strategy.manifest()}
    else:
        extra["embedding"] = {"strategy": "none"}
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.txt")

    def report(rec, _ckpt):
        vb = "-" if rec.valid_bleu is None else f"{rec.valid_bleu:.2f}"
        print(f"epoch {rec.epoch:3d}  loss {rec.train_loss:.4f}  acc {rec.train_token_accuracy:.4f}  "
              f"valid BLEU {vb}", flush=True)

    best = train_model(train, valid, mconf, tconf, vocab, embeddings, extra=extra, on_epoch=report)
    save_checkpoint(best, out / "best.ckpt")
    run.outputs += [str(out / "vocab.txt"), str(out / "best.ckpt")]
    run.notes["model"] = {"config": mconf.to_dict(), "trainable_params": count_params(mconf),
                          "loss_reduction": "sum over steps, mean over batch",
                          "padding": "PAD to batch max; source scores masked with -1e30",
                          "clip_norm": tconf.clip_norm}
    run.metrics = {
        "best_epoch": best.epoch,
        "best_valid_bleu": best.valid_bleu,
        "epochs": [{"epoch": h.epoch, "train_loss": h.train_loss,
                    "train_token_accuracy": h.train_token_accuracy, "valid_bleu": h.valid_bleu}
                   for h in best.history],
    }
    run.notes["epoch_seconds"] = [h.seconds for h in best.history]
    print(f"best epoch {best.epoch} -> {out / 'best.ckpt'}")


def cmd_translate(cfg: dict, run: Run) -> None:
    run.add_input(cfg["ckpt"])
    run.add_input(cfg["src"])
    ckpt = load_checkpoint(cfg["ckpt"])
    with open(cfg["src"], encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    sources = [preprocess(line) for line in lines]
    keep = [k for k, s in enumerate(sources) if s]
    if len(keep) < len(sources):
        print(f"{len(sources) - len(keep)} empty source line(s) produce empty output", file=sys.stderr)
    results = translate([sources[k] for k in keep], ckpt.params, ckpt.model_config, ckpt.vocab,
                        batch_size=cfg["batch_size"])
    outputs: List[List[str]] = [[] for _ in sources]
    for k, res in zip(keep, results):
        outputs[k] = unk_replace(res, sources[k]) if cfg["unk_replace"] == "on" else res.tokens
    write_translations(cfg["out"], outputs)
    run.outputs.append(str(cfg["out"]))
    if cfg["dump_attention"]:
        adir = Path(cfg["dump_attention"])
        adir.mkdir(parents=True, exist_ok=True)
        width = max(4, len(str(len(sources))))
        for k, res in zip(keep, results):
            (adir / f"{k:0{width}d}.tsv").write_text(attention_tsv(res, sources[k], ckpt.vocab),
                                                     encoding="utf-8")
        run.outputs.append(str(adir))
    if cfg["unk_json"]:
        Path(cfg["unk_json"]).write_text(unk_replacements_json(results) + "\n", encoding="utf-8")
        run.outputs.append(str(cfg["unk_json"]))
    n_unk = sum(len(r.unk_replacements) for r in results)
    run.metrics = {"sentences": len(sources), "unk_emitted": n_unk, "checkpoint_epoch": ckpt.epoch}
    print(f"translated {len(sources)} sentence(s) -> {cfg['out']}")


def cmd_score(cfg: dict, run: Run) -> None:
    if cfg["metric"] == "bleu" and not cfg["ref"]:
        raise UsageError("score bleu needs --ref")
    if cfg["metric"] == "pinc" and not cfg["src"]:
        raise UsageError("score pinc needs --src")
    hyp_path = cfg["hyp"]
    run.add_input(hyp_path)
    hyps = [preprocess(line) for line in _lines(hyp_path)]
    if cfg["metric"] == "bleu":
        run.add_input(cfg["ref"])
        refs = [preprocess(line) for line in _lines(cfg["ref"])]
        report = bleu(hyps, refs)
        run.metrics = json.loads(report.to_json())
    else:
        run.add_input(cfg["src"])
        srcs = [preprocess(line) for line in _lines(cfg["src"])]
        report = pinc(srcs, hyps)
        run.metrics = json.loads(report.to_json())
    print(report.to_json() if cfg["json"] else report.to_text())


def _lines(path) -> List[str]:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def cmd_baseline(cfg: dict, run: Run) -> None:
    run.add_input(cfg["src"])
    sources = [preprocess(line) for line in _lines(cfg["src"])]
    if cfg["system"] == "as-it-is":
        outputs = [as_it_is(s) for s in sources]
    else:
        if not cfg["lexicon"]:
            raise ValueError("the dictionary baseline needs --lexicon")
        run.add_input(cfg["lexicon"])
        lex = load_lexicon(cfg["lexicon"])
        freq: Counter = Counter()
        if cfg["train_target"]:
            run.add_input(cfg["train_target"])
            for line in _lines(cfg["train_target"]):
                freq.update(preprocess(line))
        else:
            print("no --train-target given: candidate ties fall back to lexicographic order",
                  file=sys.stderr)
        outputs = dictionary_baseline(sources, lex, freq)
        run.notes["lexicon"] = {"loaded": lex.loaded_count, "augmented": lex.augmented_count,
                                "total": len(lex)}
    write_translations(cfg["out"], outputs)
    run.outputs.append(str(cfg["out"]))
    run.metrics = {"sentences": len(outputs)}
    print(f"{cfg['system']}: wrote {len(outputs)} sentence(s) -> {cfg['out']}")


COMMANDS = {
    "preprocess": cmd_preprocess,
    "stats": cmd_stats,
    "embed": cmd_embed,
    "retrofit": cmd_retrofit,
    "train": cmd_train,
    "translate": cmd_translate,
    "score": cmd_score,
    "baseline": cmd_baseline,
}


def _default_manifest(command: str, cfg: dict) -> Path:
    if command in ("preprocess",):
        return Path(cfg["out"]) / "manifest.json"
    if command == "train":
        return Path(cfg["out_dir"]) / "manifest.json"
    if command in ("embed", "retrofit", "translate", "baseline"):
        return Path(str(cfg["out"]) + ".manifest.json")
    if command == "score":
        return Path(f"{cfg['hyp']}.{cfg['metric']}.manifest.json")
    return Path(f"bardic-{command}.manifest.json")


def _threads(flag: Optional[int]) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("BARDIC_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValueError(f"BARDIC_THREADS must be an integer, got {env!r}")
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError:
        return 1
    except SystemExit as e:   # --help / --version
        return int(e.code or 0)
    for name, value in (("threads", None), ("config", None), ("manifest", None), ("verbose", False)):
        if not hasattr(args, name):
            setattr(args, name, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    common = {"command", "threads", "config", "manifest", "verbose"}
    explicit = {k: v for k, v in vars(args).items() if k not in common}
    run = Run(args.command, argv, {})
    cfg: dict = {}
    status, err, code = "ok", None, 0
    try:
        cfg = resolve_config(args.command, explicit, args.config)
        if args.config:
            run.add_input(args.config)
        threads = _threads(args.threads)
        if threads < 1:
            raise ValueError("--threads must be >= 1")
        cfg["threads"] = threads
        run.config = cfg
        with threadpool_limits(limits=threads):
            COMMANDS[args.command](cfg, run)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        print(f"bardic: error: {e}", file=sys.stderr)
        status, err, code = "usage_error", str(e), 1
    except (ValueError, OSError, KeyError, CheckpointError, FloatingPointError) as e:
        print(f"bardic: error: {e}", file=sys.stderr)
        status, err, code = "error", str(e), 2
    try:
        path = Path(args.manifest) if args.manifest else _default_manifest(args.command, cfg or explicit)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(run.manifest(status, err), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
    except (OSError, KeyError) as e:
        print(f"bardic: could not write manifest: {e}", file=sys.stderr)
        return code or 2
    return code


if __name__ == "__main__":
    sys.exit(main())
