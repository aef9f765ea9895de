import pytest

from condstance.config import read_ini, write_ini
from condstance.corpus import Instance, parse_semeval_tsv, write_semeval_tsv
from condstance.experiment import (ExperimentError, ExperimentSpec, check_unseen, infer_test_target,
                                   load_spec, run_experiment, spec_from_sections)


def test_unseen_run_writes_all_outputs(workspace):
    out = workspace / "out"
    res = run_experiment(load_spec(workspace / "exp.ini"), out)
    names = {"report.txt", "report.json", "predictions.tsv", "history.jsonl", "history.txt",
             "model.bin", "manifest.ini"}
    assert names <= {p.name for p in out.iterdir()}
    preds = parse_semeval_tsv(out / "predictions.tsv")
    assert [p.id for p in preds] == ["t0", "t1", "t2", "t3"]
    # every test tweet but one mentions the alias, so post-processing forbids NONE there
    assert all(p.stance != "NONE" for p in preds if "hillary" in p.tweet.lower())
    assert res.report.n == 4 and len(res.history.epochs) == 3


def test_runs_are_byte_identical(workspace):
    a = run_experiment(load_spec(workspace / "exp.ini"))
    b = run_experiment(load_spec(workspace / "exp.ini"))
    assert a.files == b.files


def test_manifest_replays_the_run(workspace):
    first = run_experiment(load_spec(workspace / "exp.ini"), workspace / "a")
    again = run_experiment(load_spec(workspace / "a" / "manifest.ini"), workspace / "b")
    assert first.files == again.files
    assert set(read_ini(workspace / "a" / "manifest.ini")["inputs"]) == {"train", "dev", "test"}


def test_seed_override_changes_model(workspace):
    a = run_experiment(load_spec(workspace / "exp.ini"))
    b = run_experiment(load_spec(workspace / "exp.ini", seed=6))
    assert a.files["model.bin"] != b.files["model.bin"]
    assert "seed = 6" in b.files["manifest.ini"].decode()


def test_changed_input_is_refused(workspace):
    run_experiment(load_spec(workspace / "exp.ini"), workspace / "a")
    with open(workspace / "test.tsv", "a", encoding="utf-8") as fh:
        fh.write("t9\tHillary Clinton\tone more\tNONE\n")
    with pytest.raises(ExperimentError, match="input test .* changed"):
        run_experiment(load_spec(workspace / "a" / "manifest.ini"))


def test_test_target_in_training_aborts(workspace):
    leak = parse_semeval_tsv(workspace / "train.tsv") + [Instance("x", "hillary clinton ", "x", "NONE")]
    write_semeval_tsv(leak, workspace / "train.tsv")
    with pytest.raises(ExperimentError, match="protocol violation: 1 train"):
        run_experiment(load_spec(workspace / "exp.ini"))


def test_check_unseen_covers_dev():
    with pytest.raises(ExperimentError, match="dev"):
        check_unseen("A", train=[], dev=[Instance("1", "A", "x", "NONE")])
    check_unseen("A", train=[Instance("1", "B", "x", "NONE")])


def test_test_target_inference():
    insts = [Instance("1", "A", "x", "NONE"), Instance("2", "B", "y", "NONE")]
    assert infer_test_target(insts[:1]) == "A"
    assert infer_test_target(insts, "B") == "B"
    with pytest.raises(ExperimentError, match="set test_target"):
        infer_test_target(insts)


def test_weakly_supervised_mode(workspace):
    sections = read_ini(workspace / "exp.ini")
    sections["experiment"] = {"mode": "weakly_supervised", "unlabeled": "unlab.txt", "test": "trump.tsv"}
    write_semeval_tsv([Instance("d1", "Donald Trump", "trump is an idiot", "AGAINST"),
                       Instance("d2", "Donald Trump", "make america great again", "FAVOR")],
                      workspace / "trump.tsv")
    (workspace / "weak.ini").write_text(write_ini(sections), encoding="utf-8")
    res = run_experiment(load_spec(workspace / "weak.ini"), workspace / "w")
    auto = parse_semeval_tsv(workspace / "w" / "autolabeled.tsv")
    assert [a.stance for a in auto] == ["FAVOR", "AGAINST", "FAVOR", "AGAINST"]
    assert {a.target for a in auto} == {"Donald Trump"}
    assert res.report.n == 2


def test_pretraining_writes_embeddings(workspace):
    (workspace / "raw.txt").write_text("\n".join(["the vote is tonight"] * 30), encoding="utf-8")
    sections = read_ini(workspace / "exp.ini")
    sections["experiment"]["pretrain_corpus"] = "raw.txt"
    sections["model"]["emb_mode"] = "PreCont"
    sections["skipgram"] = {"dim": "8", "epochs": "1", "min_count": "1"}
    (workspace / "pre.ini").write_text(write_ini(sections), encoding="utf-8")
    spec = load_spec(workspace / "pre.ini")
    assert spec.skipgram.seed == spec.seed == 5
    a = run_experiment(spec)
    assert a.files == run_experiment(load_spec(workspace / "pre.ini")).files
    head = a.files["embeddings.txt"].split(b"\n")[0].split()
    assert head[1] == b"8" and int(head[0]) > 4


@pytest.mark.parametrize("sections,msg", [
    ({"experiment": {"mode": "x", "test": "t"}}, "unknown mode"),
    ({"experiment": {"train": "t"}}, "test corpus"),
    ({"experiment": {"test": "t"}}, "labeled training corpus"),
    ({"experiment": {"mode": "weakly_supervised", "test": "t"}}, "unlabeled"),
    ({"experiment": {"test": "t", "train": "t"}, "model": {"emb_mode": "PreFixed"}}, "needs embeddings"),
    ({"experiment": {"test": "t", "train": "t", "speed": "1"}}, "unknown \\[experiment\\] key"),
])
def test_spec_validation(sections, msg):
    with pytest.raises(ExperimentError, match=msg):
        spec_from_sections(sections)


def test_missing_input_reported(tmp_path):
    spec = ExperimentSpec(test=str(tmp_path / "none.tsv"), train=str(tmp_path / "none.tsv"))
    with pytest.raises(ExperimentError, match="not found"):
        run_experiment(spec)
