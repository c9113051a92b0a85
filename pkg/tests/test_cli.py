import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

from bardic.cli import main
from bardic.toy import DATA_DIR


def run(*argv):
    return main([str(a) for a in argv])


def manifest(path):
    data = json.loads(path.read_text(encoding="utf-8"))
    data.pop("timings")
    return data


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    code = run("train", "--data-dir", "@toy", "--out-dir", out, "--embed-dim", 8, "--hidden-dim", 8,
               "--epochs", 2, "--batch-size", 16)
    assert code == 0
    return out


def test_help_and_version(capsys):
    assert run("--help") == 0
    assert "translate" in capsys.readouterr().out
    for cmd in ("preprocess", "stats", "embed", "retrofit", "train", "translate", "score", "baseline"):
        assert run(cmd, "--help") == 0
        assert "usage: bardic " + cmd in capsys.readouterr().out
    assert run("--version") == 0


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bardic.cli", "score", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "--hyp" in proc.stdout


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run("train", "--data-dir", "@toy", "--out-dir", tmp_path, "--bogus") == 1
    assert "usage:" in capsys.readouterr().err
    assert run("frobnicate") == 1
    assert run("score", "bleu", "--hyp", tmp_path / "x", "--manifest", tmp_path / "m.json") == 1


def test_config_errors_exit_2(tmp_path, capsys):
    code = run("train", "--data-dir", "@toy", "--out-dir", tmp_path / "t", "--fixed")
    assert code == 2
    assert "--fixed needs pretrained embeddings" in capsys.readouterr().err
    m = json.loads((tmp_path / "t" / "manifest.json").read_text())
    assert m["status"] == "error"
    assert run("stats", "--data-dir", tmp_path / "missing", "--manifest", tmp_path / "m.json") == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run("--config", cfg, "stats", "--data-dir", "@toy", "--manifest", tmp_path / "m.json") == 2


def test_preprocess_and_stats(tmp_path, capsys):
    out = tmp_path / "prep"
    assert run("preprocess", "--data-dir", "@toy", "--out", out) == 0
    for name in ("train.modern.txt", "test.original.txt", "vocab.txt", "stats.txt", "stats.json", "lexicon.tsv"):
        assert (out / name).is_file()
    m = manifest(out / "manifest.json")
    assert m["status"] == "ok" and m["metrics"]["pairs"] == {"train": 160, "valid": 20, "test": 20}
    assert all(len(h) == 64 for h in m["inputs"].values())
    capsys.readouterr()
    assert run("stats", "--data-dir", "@toy", "--json", "--manifest", tmp_path / "s.json") == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["union_type_count"] + 4 == m["metrics"]["vocab_size"]     # plus the specials
    # preprocessed text is a fixed point of preprocessing
    assert run("preprocess", "--data-dir", out, "--out", tmp_path / "again") == 0
    assert (tmp_path / "again" / "train.original.txt").read_bytes() == (out / "train.original.txt").read_bytes()


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"stats": {"split": "test"}}))
    mpath = tmp_path / "m.json"
    assert run("--config", cfg, "stats", "--data-dir", "@toy", "--manifest", mpath) == 0
    assert json.loads(mpath.read_text())["config"]["split"] == "test"
    assert run("--config", cfg, "stats", "--data-dir", "@toy", "--split", "valid", "--manifest", mpath) == 0
    assert json.loads(mpath.read_text())["config"]["split"] == "valid"
    assert run("stats", "--data-dir", "@toy", "--manifest", mpath) == 0
    assert json.loads(mpath.read_text())["config"]["split"] == "train"


def test_threads_env(tmp_path, monkeypatch):
    mpath = tmp_path / "m.json"
    monkeypatch.setenv("BARDIC_THREADS", "2")
    assert run("stats", "--data-dir", "@toy", "--manifest", mpath) == 0
    assert json.loads(mpath.read_text())["config"]["threads"] == 2
    assert run("--threads", 1, "stats", "--data-dir", "@toy", "--manifest", mpath) == 0
    assert json.loads(mpath.read_text())["config"]["threads"] == 1
    monkeypatch.setenv("BARDIC_THREADS", "many")
    assert run("stats", "--data-dir", "@toy", "--manifest", mpath) == 2


def test_score_identity(tmp_path, capsys):
    ref = DATA_DIR / "test.original.txt"
    assert run("score", "bleu", "--hyp", ref, "--ref", ref, "--manifest", tmp_path / "m.json") == 0
    assert capsys.readouterr().out.startswith("BLEU = 100.00")
    assert run("score", "pinc", "--hyp", ref, "--src", ref, "--json", "--manifest", tmp_path / "m.json") == 0
    assert json.loads(capsys.readouterr().out)["pinc"] == 0.0


def test_baselines(tmp_path, capsys):
    src = DATA_DIR / "test.modern.txt"
    out = tmp_path / "asis.txt"
    assert run("baseline", "as-it-is", "--src", src, "--out", out) == 0
    assert json.loads((tmp_path / "asis.txt.manifest.json").read_text())["metrics"]["sentences"] == 20
    dic = tmp_path / "dict.txt"
    assert run("baseline", "dictionary", "--src", src, "--out", dic, "--lexicon", DATA_DIR / "lexicon.tsv",
               "--train-target", DATA_DIR / "train.original.txt") == 0
    assert "thou" in dic.read_text(encoding="utf-8")
    assert run("baseline", "dictionary", "--src", src, "--out", dic) == 2


def test_embed_and_retrofit(tmp_path):
    vec = tmp_path / "plain.vec"
    assert run("embed", "--data-dir", "@toy", "--strategy", "plain", "--dim", 8, "--sgns-epochs", 1,
               "--out", vec) == 0
    header = vec.read_text(encoding="utf-8").splitlines()[0].split()
    assert header[1] == "8"
    retro = tmp_path / "retro.vec"
    assert run("retrofit", "--embed", vec, "--lexicon", DATA_DIR / "lexicon.tsv", "--out", retro) == 0
    m = json.loads((tmp_path / "retro.vec.manifest.json").read_text())
    assert m["metrics"]["constraints"] > 0
    assert run("embed", "--data-dir", "@toy", "--strategy", "plainext", "--out", vec) == 2


def test_train_with_fixed_embedding_file(tmp_path):
    vec = tmp_path / "e.vec"
    assert run("embed", "--data-dir", "@toy", "--strategy", "retro", "--dim", 8, "--sgns-epochs", 1,
               "--out", vec) == 0
    out = tmp_path / "t"
    assert run("train", "--data-dir", "@toy", "--out-dir", out, "--embed-dim", 8, "--hidden-dim", 8,
               "--epochs", 1, "--share", "--fixed", "--embed", vec, "--sentinel-loss", "--no-copy") == 0
    m = manifest(out / "manifest.json")
    assert m["config"]["copy"] is False and m["config"]["fixed"] is True
    assert m["notes"]["model"]["trainable_params"] < 20000


def test_train_manifest(trained):
    m = manifest(trained / "manifest.json")
    assert m["status"] == "ok"
    assert len(m["metrics"]["epochs"]) == 2
    assert all(e["valid_bleu"] is not None for e in m["metrics"]["epochs"])
    assert m["seeds"] == {"init": 0, "shuffle": 0}
    assert (trained / "best.ckpt").is_file() and (trained / "vocab.txt").is_file()


def test_translate_outputs(tmp_path, trained):
    src = DATA_DIR / "test.modern.txt"
    out = tmp_path / "hyp.txt"
    att = tmp_path / "att"
    assert run("translate", "--ckpt", trained / "best.ckpt", "--src", src, "--out", out,
               "--dump-attention", att, "--unk-json", tmp_path / "unk.json") == 0
    lines = out.read_text(encoding="utf-8").split("\n")[:-1]
    assert len(lines) == 20
    assert all(line == line.lower() for line in lines)
    assert len(list(att.glob("*.tsv"))) == 20
    assert len(json.loads((tmp_path / "unk.json").read_text())) == 20
    assert run("translate", "--ckpt", tmp_path / "nope.ckpt", "--src", src, "--out", out) == 2


def test_translate_deterministic(tmp_path, trained, monkeypatch):
    src = DATA_DIR / "valid.modern.txt"
    outs = []
    for k in range(2):
        (tmp_path / str(k)).mkdir()
        monkeypatch.chdir(tmp_path / str(k))
        assert run("translate", "--ckpt", trained / "best.ckpt", "--src", src, "--out", "hyp.txt",
                   "--unk-replace", "off") == 0
        outs.append((Path("hyp.txt").read_bytes(), manifest(Path("hyp.txt.manifest.json"))))
    assert outs[0] == outs[1]


def test_full_toy_pipeline_is_fast(tmp_path):
    t0 = time.perf_counter()
    assert run("preprocess", "--data-dir", "@toy", "--out", tmp_path / "p") == 0
    assert run("train", "--data-dir", tmp_path / "p", "--out-dir", tmp_path / "m", "--size", "S",
               "--epochs", 1, "--embed-strategy", "retro", "--sgns-epochs", 1,
               "--lexicon", DATA_DIR / "lexicon.tsv") == 0
    assert run("translate", "--ckpt", tmp_path / "m" / "best.ckpt", "--src", tmp_path / "p" / "test.modern.txt",
               "--out", tmp_path / "hyp.txt") == 0
    assert run("score", "bleu", "--hyp", tmp_path / "hyp.txt", "--ref", tmp_path / "p" / "test.original.txt") == 0
    assert time.perf_counter() - t0 < 60
