"""Unseen-target and weakly supervised protocol on the SemEval 2016 stance data.

Development setup: train on the Task A targets except Hillary Clinton, report on
Hillary Clinton. Test setup: train on all Task A data, report on the Task B
Donald Trump test set. Weak setup: train on the regex-labeled Task B unlabeled
corpus, report on the same test set. Neither setup has a held-out dev set, so
each run keeps its final epoch.

    python scripts/semeval_protocol.py --taska trainingdata-taskA.txt trialdata-taskA.txt \\
        --taskb-test SemEval2016-Task6-testdata-taskB.txt --taskb-unlab downloaded_Donald_Trump.txt \\
        --pretrain crawled_tweets.txt --out results/

Corpora are not shipped. Without --pretrain or --embeddings, LSTM models use
random embeddings and BoWV is skipped.
"""

import argparse
import sys
from pathlib import Path

from condstance.corpus import parse_semeval_tsv, read_tweets, write_semeval_tsv
from condstance.embed import SkipgramConfig, save_embeddings, train_skipgram
from condstance.encoders import VARIANTS
from condstance.experiment import spec_from_sections, run_experiment
from condstance.metrics import report_table
from condstance.textprep import tokenize

DEV_TARGET = "Hillary Clinton"
ALIASES = {"Donald Trump": "trump, donald", "Hillary Clinton": "hillary, clinton"}


def log(msg):
    print(msg, file=sys.stderr, flush=True)


def split_task_a(paths, out):
    data = [i for p in paths for i in parse_semeval_tsv(p)]
    train = [i for i in data if i.target != DEV_TARGET]
    hc = [i for i in data if i.target == DEV_TARGET]
    if not hc:
        raise SystemExit(f"no {DEV_TARGET} tweets in the Task A files")
    files = {"taska_all.tsv": data, "taska_dev_train.tsv": train, "taska_hc.tsv": hc}
    for name, insts in files.items():
        write_semeval_tsv(insts, out / name)
    return {k: str(out / k) for k in files}


def spec_for(method, mode, train, test, embeddings, args, unlabeled=""):
    model = {"variant": method, "seed": str(args.seed), "max_epochs": str(args.epochs)}
    if embeddings:
        model["emb_mode"] = "PreFixed" if method == "BoWV" else "PreCont"
    exp = {"mode": mode, "test": test, "method": method}
    if train:
        exp["train"] = train
    if unlabeled:
        exp["unlabeled"] = unlabeled
    if embeddings:
        exp["embeddings"] = embeddings
    return spec_from_sections({"experiment": exp, "model": model, "aliases": ALIASES}, ".")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--taska", nargs="+", required=True, help="Task A train/dev TSV files")
    p.add_argument("--taskb-test", required=True)
    p.add_argument("--taskb-unlab", default=None, help="raw Donald Trump tweets for the weak setup")
    p.add_argument("--pretrain", nargs="*", default=[], help="raw tweet corpora for skip-gram")
    p.add_argument("--embeddings", default=None, help="ready-made embedding file instead of --pretrain")
    p.add_argument("--methods", nargs="+", default=list(VARIANTS), choices=VARIANTS)
    p.add_argument("--setups", nargs="+", default=["dev", "test", "weak"], choices=["dev", "test", "weak"])
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = split_task_a(args.taska, out)

    embeddings = args.embeddings
    if args.pretrain and not embeddings:
        texts = [t for p_ in args.pretrain for t in read_tweets(p_)]
        texts += [t for p_ in args.taska + [args.taskb_test] for t in read_tweets(p_)]
        log(f"skip-gram on {len(texts)} texts")
        res = train_skipgram((tokenize(t) for t in texts), SkipgramConfig(seed=args.seed))
        embeddings = str(out / "embeddings.txt")
        save_embeddings(res.table, embeddings)

    methods = [m for m in args.methods if m != "BoWV" or embeddings]
    setups = {
        "dev": ("unseen_target", files["taska_dev_train.tsv"], files["taska_hc.tsv"], ""),
        "test": ("unseen_target", files["taska_all.tsv"], args.taskb_test, ""),
        "weak": ("weakly_supervised", "", args.taskb_test, args.taskb_unlab),
    }
    for setup in args.setups:
        mode, train, test, unlab = setups[setup]
        if setup == "weak" and not unlab:
            log("weak setup skipped: no --taskb-unlab")
            continue
        reports = []
        for method in methods:
            log(f"[{setup}] {method}")
            spec = spec_for(method, mode, train, test, embeddings, args, unlab)
            res = run_experiment(spec, out / setup / method, log=log)
            reports.append((method, res.report))
        table = report_table(reports)
        (out / f"table_{setup}.txt").write_text(table, encoding="utf-8")
        print(f"== {setup} setup ==")
        print(table)


if __name__ == "__main__":
    main()
