import subprocess
import sys

import pytest

from condstance.cli import main
from condstance.config import read_ini
from condstance.corpus import parse_semeval_tsv


def run(*argv):
    return main([str(a) for a in argv])


def test_eval_gold_against_itself(workspace, capsys):
    assert run("eval", "--gold", workspace / "test.tsv", "--pred", workspace / "test.tsv") == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1].split() == ["Macro", "1.0000"]


def test_eval_id_mismatch_fails(workspace, capsys):
    assert run("eval", "--gold", workspace / "test.tsv", "--pred", workspace / "train.tsv") == 1
    err = capsys.readouterr().err
    assert err.startswith("condstance eval: error:") and "ids" in err


def test_usage_errors_exit_nonzero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["eval", "--bogus"])
    assert exc.value.code == 2
    assert run("eval") == 1
    assert "missing --gold, --pred" in capsys.readouterr().err


def test_missing_input_file(workspace, capsys):
    assert run("eval", "--gold", workspace / "nope.tsv", "--pred", workspace / "test.tsv") == 1
    assert "no such file" in capsys.readouterr().err


def test_autolabel_three_line_corpus(workspace, capsys):
    corpus = workspace / "three.txt"
    corpus.write_text("MakeAmericaGreatAgain!\n#dumptrump now\nlovely weather today\n", encoding="utf-8")
    out = workspace / "auto.tsv"
    assert run("autolabel", "--corpus", corpus, "--out", out, "--seed", 1) == 0
    rows = parse_semeval_tsv(out)
    assert [(r.tweet, r.stance) for r in rows[:2]] == [("MakeAmericaGreatAgain!", "FAVOR"),
                                                      ("#dumptrump now", "AGAINST")]
    assert len(rows) in (2, 3)
    manifest = read_ini(str(out) + ".manifest.ini")
    assert manifest["run"]["command"] == "autolabel" and manifest["run"]["seed"] == "1"
    assert set(manifest["inputs"]) == {"corpus"}


def test_train_predict_eval_pipeline(workspace, capsys):
    cfg = workspace / "exp.ini"
    model = workspace / "m.bin"
    assert run("train", "--config", cfg, "--train", workspace / "train.tsv",
               "--dev", workspace / "dev.tsv", "--out", model, "--quiet") == 0
    assert (workspace / "m.bin.history.jsonl").read_text().splitlines()[-1].startswith('{"best_epoch": ')
    assert (workspace / "m.bin.history.txt").is_file()
    assert run("predict", "--model", model, "--input", workspace / "test.tsv",
               "--out", workspace / "p.tsv") == 0
    assert run("eval", "--gold", workspace / "test.tsv", "--pred", workspace / "p.tsv") == 0
    assert "Macro" in capsys.readouterr().out
    manifest = read_ini(str(model) + ".manifest.ini")
    assert manifest["model"]["hidden_k"] == "6" and manifest["run"]["seed"] == "5"


def test_train_manifest_replays_byte_identically(workspace):
    model = workspace / "m.bin"
    assert run("train", "--config", workspace / "exp.ini", "--train", workspace / "train.tsv",
               "--out", model, "--quiet") == 0
    first = model.read_bytes()
    model.unlink()
    assert run("train", "--config", str(model) + ".manifest.ini", "--quiet",
               "--manifest", workspace / "second.ini") == 0
    assert model.read_bytes() == first
    assert (workspace / "second.ini").read_text() == (workspace / "m.bin.manifest.ini").read_text()


def test_manifest_refuses_changed_input(workspace, capsys):
    model = workspace / "m.bin"
    run("train", "--config", workspace / "exp.ini", "--train", workspace / "train.tsv",
        "--out", model, "--quiet")
    with open(workspace / "train.tsv", "a", encoding="utf-8") as fh:
        fh.write("z\tAtheism\tanother tweet\tNONE\n")
    assert run("train", "--config", str(model) + ".manifest.ini", "--quiet") == 1
    assert "changed since the manifest" in capsys.readouterr().err


def test_manifest_for_other_command_rejected(workspace, capsys):
    out = workspace / "auto.tsv"
    run("autolabel", "--corpus", workspace / "unlab.txt", "--out", out, "--quiet")
    assert run("train", "--config", str(out) + ".manifest.ini") == 1
    assert "written by 'autolabel'" in capsys.readouterr().err


def test_experiment_twice_from_manifest(workspace, capsys):
    assert run("experiment", "--config", workspace / "exp.ini", "--out", workspace / "a", "--quiet") == 0
    assert run("experiment", "--config", workspace / "a" / "manifest.ini", "--out", workspace / "b",
               "--quiet") == 0
    assert run("experiment", "--config", workspace / "a" / "manifest.ini", "--out", workspace / "c",
               "--quiet") == 0
    for name in ("report.txt", "report.json", "history.jsonl", "predictions.tsv", "model.bin"):
        assert (workspace / "b" / name).read_bytes() == (workspace / "c" / name).read_bytes()
        assert (workspace / "a" / name).read_bytes() == (workspace / "b" / name).read_bytes()


def test_experiment_needs_config(workspace, capsys):
    assert run("experiment", "--out", workspace / "x") == 1
    assert "needs --config" in capsys.readouterr().err


def test_pretrain_command(workspace):
    corpus = workspace / "raw.txt"
    corpus.write_text("\n".join(["a b c d e f"] * 20), encoding="utf-8")
    cfg = workspace / "sg.ini"
    cfg.write_text("[skipgram]\ndim = 4\nmin_count = 1\nepochs = 1\n", encoding="utf-8")
    out = workspace / "emb.txt"
    assert run("pretrain", "--config", cfg, "--corpus", corpus, "--out", out, "--seed", 2, "--quiet") == 0
    assert out.read_text().splitlines()[0] == "7 4"  # six words plus [UNK]
    manifest = read_ini(str(out) + ".manifest.ini")
    assert manifest["skipgram"]["seed"] == "2" and "corpus.0" in manifest["inputs"]


def test_module_entry_point_diagnostics_on_stderr(workspace):
    proc = subprocess.run([sys.executable, "-m", "condstance.cli", "eval", "--gold",
                           str(workspace / "test.tsv"), "--pred", str(workspace / "test.tsv")],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stderr == "" and "Macro" in proc.stdout
