"""Command-line interface.

Every command takes ``--seed`` and ``--config``. Options left off the command
line are read from the config's ``[run]`` section, and every run writes a
manifest in the same format (resolved options, config sections, seed and the
SHA-256 of each input). Passing that manifest back as ``--config`` repeats the
run; changed inputs are refused.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from .config import (model_config_from_sections, model_config_sections, read_ini,
                     skipgram_from_dict, split_list, write_ini)
from .corpus import CorpusError, format_tsv, parse_semeval_tsv, read_lines, read_tweets
from .embed import format_embeddings, load_embeddings, train_skipgram
from .experiment import ExperimentError, load_spec, run_experiment, sha256_file
from .metrics import per_class_prf, report_table
from .textprep import tokenize
from .train import CheckpointError, TrainingError, load_model, predict_labels, save_model, train_supervised
from .weaklabel import RuleError, compile_rules, label_corpus

# per command: (option, is an input file, is a list)
OPTIONS = {
    "pretrain": [("corpus", True, True), ("out", False, False)],
    "autolabel": [("corpus", True, False), ("rules", True, False), ("target", False, False),
                  ("out", False, False)],
    "train": [("train", True, False), ("dev", True, False), ("embeddings", True, False),
              ("out", False, False)],
    "predict": [("model", True, False), ("input", True, False), ("out", False, False),
                ("no_postprocess", False, False)],
    "eval": [("gold", True, False), ("pred", True, False), ("out", False, False)],
    "experiment": [("out", False, False)],
}
REQUIRED = {
    "pretrain": ("corpus", "out"), "autolabel": ("corpus", "out"), "train": ("train", "out"),
    "predict": ("model", "input", "out"), "eval": ("gold", "pred"), "experiment": ("out",),
}


class UsageError(ValueError):
    pass


def log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="condstance", description="Target-conditioned LSTM stance detection.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help_):
        c = sub.add_parser(name, help=help_)
        c.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
        c.add_argument("--config", default=None, help="INI config or a manifest from an earlier run")
        c.add_argument("--manifest", default=None, help="where to write the reproduction manifest")
        c.add_argument("--quiet", action="store_true", help="suppress progress messages")
        return c

    c = command("pretrain", "train skip-gram embeddings on raw text or TSV corpora")
    c.add_argument("--corpus", nargs="+", default=None)
    c.add_argument("--out", default=None, help="embedding file (word2vec text format)")

    c = command("autolabel", "label a raw tweet corpus with the regex rules")
    c.add_argument("--corpus", default=None, help="one tweet per line")
    c.add_argument("--rules", default=None, help="rule file; default: the shipped Donald Trump rules")
    c.add_argument("--target", default=None, help="target written to the output (default Donald Trump)")
    c.add_argument("--out", default=None, help="labeled TSV")

    c = command("train", "train a stance model")
    c.add_argument("--train", default=None)
    c.add_argument("--dev", default=None)
    c.add_argument("--embeddings", default=None, help="pretrained embeddings for PreFixed/PreCont")
    c.add_argument("--out", default=None, help="checkpoint path; the history is written beside it")

    c = command("predict", "predict stances for a TSV file")
    c.add_argument("--model", default=None)
    c.add_argument("--input", default=None)
    c.add_argument("--out", default=None, help="prediction TSV")
    c.add_argument("--no-postprocess", dest="no_postprocess", action="store_const", const=True, default=None)

    c = command("eval", "score predictions against gold labels")
    c.add_argument("--gold", default=None)
    c.add_argument("--pred", default=None)
    c.add_argument("--out", default=None, help="also write the report table here")

    c = command("experiment", "run the full protocol described by --config")
    c.add_argument("--out", default=None, help="output directory")
    return p


def _as_bool(v) -> bool:
    return v if isinstance(v, bool) else str(v).strip().lower() in ("1", "true", "yes", "on")


def resolve_options(args, sections) -> Dict[str, object]:
    """Command-line values win; missing ones come from ``[run]``."""
    run = sections.get("run", {})
    base = Path(args.config).parent if args.config else Path(".")
    if run.get("command", args.command) != args.command:
        raise UsageError(f"config was written by '{run['command']}', not '{args.command}'")
    opts: Dict[str, object] = {}
    for name, is_input, is_list in OPTIONS[args.command]:
        is_path = is_input or name == "out"
        value = getattr(args, name)
        if value is None and name in run:
            value = split_list(run[name]) if is_list else run[name]
            if name == "no_postprocess":
                value = _as_bool(value)
            elif is_list:
                value = [str(base / v) for v in value]
            elif is_path:
                value = str(base / value)
        opts[name] = value
    missing = [n for n in REQUIRED[args.command] if not opts.get(n)]
    if missing:
        raise UsageError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))
    seed = args.seed if args.seed is not None else run.get("seed")
    opts["seed"] = int(seed) if seed is not None else None
    return opts


def input_digests(command: str, opts, recorded: Dict[str, str]) -> Dict[str, str]:
    digests = {}
    for name, is_input, is_list in OPTIONS[command]:
        if not is_input or not opts.get(name):
            continue
        paths = opts[name] if is_list else [opts[name]]
        for i, path in enumerate(paths):
            key = f"{name}.{i}" if is_list else name
            if not Path(path).is_file():
                raise UsageError(f"--{name}: no such file {path}")
            digests[key] = sha256_file(path)
            if key in recorded and recorded[key] != digests[key]:
                raise UsageError(f"input {key} ({path}) changed since the manifest was written")
    return digests


def write_manifest(path, command, opts, sections, digests) -> None:
    run = {"command": command}
    for name, is_input, is_list in OPTIONS[command]:
        value = opts.get(name)
        if value in (None, False, [], ""):
            continue
        if is_list:
            value = [str(Path(v).resolve()) for v in value]
        elif isinstance(value, str) and (is_input or name == "out"):
            value = str(Path(value).resolve())
        run[name] = value
    if opts.get("seed") is not None:
        run["seed"] = opts["seed"]
    out = {"run": run}
    out.update(sections)
    out["inputs"] = digests
    Path(path).write_text(write_ini(out), encoding="utf-8")


def _manifest_path(args, opts, default_suffix=".manifest.ini") -> str:
    if args.manifest:
        return args.manifest
    out = opts.get("out")
    return str(out) + default_suffix if out else f"{args.command}.manifest.ini"


# --------------------------------------------------------------------------
# commands

def cmd_pretrain(args, opts, sections, say):
    cfg = skipgram_from_dict(sections.get("skipgram", {}))
    if opts["seed"] is not None:
        cfg = dataclasses.replace(cfg, seed=opts["seed"])
    texts = [t for path in opts["corpus"] for t in read_tweets(path)]
    say(f"pretrain: {len(texts)} texts, dim {cfg.dim}, window {cfg.window}, {cfg.epochs} epochs")
    res = train_skipgram((tokenize(t) for t in texts), cfg)
    say(f"pretrain: vocabulary {len(res.table.vocab)}, {res.total_pairs} pairs, mean loss {res.mean_loss:.4f}")
    Path(opts["out"]).write_text(format_embeddings(res.table), encoding="utf-8")
    opts["seed"] = cfg.seed
    return {"skipgram": dataclasses.asdict(cfg)}


def cmd_autolabel(args, opts, sections, say):
    seed = opts["seed"] if opts["seed"] is not None else 0
    opts["seed"] = seed
    rules = compile_rules(opts["rules"] or None, seed=seed)
    target = opts["target"] or "Donald Trump"
    instances, counts = label_corpus(read_lines(opts["corpus"]), rules, target=target)
    say("autolabel: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    Path(opts["out"]).write_text(format_tsv(instances), encoding="utf-8")
    return {}


def cmd_train(args, opts, sections, say):
    cfg = model_config_from_sections(sections, opts["seed"])
    opts["seed"] = cfg.seed
    train = parse_semeval_tsv(opts["train"])
    dev = parse_semeval_tsv(opts["dev"]) if opts["dev"] else []
    pretrained = load_embeddings(opts["embeddings"]) if opts["embeddings"] else None
    if cfg.emb_mode != "Random" and pretrained is None:
        raise UsageError(f"emb_mode {cfg.emb_mode} needs --embeddings")
    tm, history = train_supervised(train, dev, cfg, pretrained, log=say)
    out = Path(opts["out"])
    save_model(tm, out)
    out.with_name(out.name + ".history.jsonl").write_text(history.to_jsonl(), encoding="utf-8")
    out.with_name(out.name + ".history.txt").write_text(history.to_table(), encoding="utf-8")
    say(f"train: best epoch {history.best_epoch}")
    return model_config_sections(cfg)


def cmd_predict(args, opts, sections, say):
    tm = load_model(opts["model"])
    data = parse_semeval_tsv(opts["input"], allow_unlabeled=True)
    use_pp = not opts["no_postprocess"]
    labels, _ = predict_labels(data, tm, use_pp)
    out = [dataclasses.replace(i, stance=lab) for i, lab in zip(data, labels)]
    Path(opts["out"]).write_text(format_tsv(out), encoding="utf-8")
    say(f"predict: {len(out)} instances")
    return {}


def cmd_eval(args, opts, sections, say):
    gold = parse_semeval_tsv(opts["gold"])
    pred = parse_semeval_tsv(opts["pred"])
    if [g.id for g in gold] != [p.id for p in pred]:
        raise UsageError("gold and prediction files list different instance ids")
    report = per_class_prf([g.stance for g in gold], [p.stance for p in pred])
    table = report_table([(Path(opts["pred"]).stem, report)])
    sys.stdout.write(table)
    if opts["out"]:
        Path(opts["out"]).write_text(table, encoding="utf-8")
    return {}


def cmd_experiment(args, opts, sections, say):
    if not args.config:
        raise UsageError("experiment needs --config <experiment file>")
    spec = load_spec(args.config, opts["seed"])
    opts["seed"] = spec.seed
    result = run_experiment(spec, opts["out"], log=say)
    sys.stdout.write(result.files["report.txt"].decode("utf-8"))
    return None


COMMANDS = {"pretrain": cmd_pretrain, "autolabel": cmd_autolabel, "train": cmd_train,
            "predict": cmd_predict, "eval": cmd_eval, "experiment": cmd_experiment}
ERRORS = (UsageError, ExperimentError, CorpusError, CheckpointError, RuleError, TrainingError,
          ValueError, OSError)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    say = (lambda s: None) if args.quiet else log
    try:
        sections = read_ini(args.config) if args.config else {}
        if args.command == "experiment":
            # the experiment writes its own manifest.ini as the reproduction record
            opts = {"out": args.out, "seed": args.seed}
            if not opts["out"]:
                raise UsageError("missing --out")
            COMMANDS["experiment"](args, opts, sections, say)
            return 0
        opts = resolve_options(args, sections)
        recorded = sections.get("inputs", {})
        digests = input_digests(args.command, opts, recorded)
        used = COMMANDS[args.command](args, opts, sections, say)
        write_manifest(_manifest_path(args, opts), args.command, opts, used, digests)
    except ERRORS as exc:
        print(f"condstance {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
