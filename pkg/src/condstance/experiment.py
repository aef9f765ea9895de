"""End-to-end experiment protocol: unseen-target and weakly supervised runs.

An experiment is described by an INI file with an ``[experiment]`` section
(mode and corpus paths), ``[model]``, ``[aliases]`` and an optional
``[skipgram]`` section. A run writes its outputs plus ``manifest.ini``, a
self-contained experiment file with input digests that reproduces the run byte
for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .config import (ModelConfig, model_config_from_sections, model_config_sections, read_ini,
                     skipgram_from_dict, write_ini)
from .corpus import Instance, format_tsv, parse_semeval_tsv, read_lines, read_tweets
from .embed import RANDOM, EmbeddingTable, SkipgramConfig, format_embeddings, load_embeddings, train_skipgram
from .metrics import EvalReport, report_table
from .textprep import tokenize
from .train import checkpoint_bytes, evaluate_on, train_supervised
from .weaklabel import compile_rules, label_corpus

UNSEEN_TARGET = "unseen_target"
WEAKLY_SUPERVISED = "weakly_supervised"
MODES = (UNSEEN_TARGET, WEAKLY_SUPERVISED)

# keys of [experiment] that name input files
PATH_KEYS = ("train", "dev", "test", "unlabeled", "rules", "embeddings", "pretrain_corpus")


class ExperimentError(RuntimeError):
    pass


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class ExperimentSpec:
    mode: str = UNSEEN_TARGET
    test: str = ""
    train: str = ""
    dev: str = ""
    unlabeled: str = ""
    rules: str = ""
    embeddings: str = ""
    pretrain_corpus: List[str] = field(default_factory=list)
    test_target: str = ""
    method: str = ""
    model: ModelConfig = field(default_factory=ModelConfig)
    skipgram: Optional[SkipgramConfig] = None
    digests: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ExperimentError(f"unknown mode {self.mode!r}; choose {' or '.join(MODES)}")
        if not self.test:
            raise ExperimentError("an experiment needs a test corpus")
        if self.mode == UNSEEN_TARGET and not self.train:
            raise ExperimentError("unseen_target mode needs a labeled training corpus")
        if self.mode == WEAKLY_SUPERVISED and not self.unlabeled:
            raise ExperimentError("weakly_supervised mode needs an unlabeled target corpus")
        if self.model.emb_mode != RANDOM and not (self.embeddings or self.pretrain_corpus):
            raise ExperimentError(f"emb_mode {self.model.emb_mode} needs embeddings or a pretrain_corpus")
        if self.embeddings and self.pretrain_corpus:
            raise ExperimentError("give either embeddings or pretrain_corpus, not both")

    @property
    def seed(self) -> int:
        return self.model.seed

    def input_files(self) -> List[Tuple[str, str]]:
        out = []
        for key in PATH_KEYS:
            value = getattr(self, key)
            if key == "pretrain_corpus":
                out.extend((f"pretrain_corpus.{i}", p) for i, p in enumerate(value))
            elif value:
                out.append((key, value))
        return out

    def label(self) -> str:
        return self.method or self.model.variant

    def sections(self) -> Dict[str, Dict[str, object]]:
        exp = {"mode": self.mode}
        for key in PATH_KEYS:
            value = getattr(self, key)
            if value:
                exp[key] = value
        if self.test_target:
            exp["test_target"] = self.test_target
        if self.method:
            exp["method"] = self.method
        out = {"experiment": exp}
        out.update(model_config_sections(self.model))
        if self.skipgram is not None:
            out["skipgram"] = dataclasses.asdict(self.skipgram)
        return out


def _split_paths(value: str) -> List[str]:
    return [p.strip() for p in value.replace("\n", ",").split(",") if p.strip()]


def spec_from_sections(sections, base_dir=".", seed: Optional[int] = None) -> ExperimentSpec:
    """Build an ExperimentSpec; relative paths resolve against ``base_dir``."""
    exp = dict(sections.get("experiment", {}))
    base = Path(base_dir)

    def resolve(p: str) -> str:
        return str((base / p).resolve()) if p else ""

    kwargs = {}
    for key, value in exp.items():
        if key == "pretrain_corpus":
            kwargs[key] = [resolve(p) for p in _split_paths(value)]
        elif key in PATH_KEYS:
            kwargs[key] = resolve(value.strip())
        elif key in ("mode", "test_target", "method"):
            kwargs[key] = value.strip()
        else:
            raise ExperimentError(f"unknown [experiment] key {key!r}")
    model = model_config_from_sections(sections, seed)
    skip = None
    if "skipgram" in sections:
        values = dict(sections["skipgram"])
        if seed is not None or "seed" not in values:
            values["seed"] = model.seed
        skip = skipgram_from_dict(values)
    return ExperimentSpec(model=model, skipgram=skip, digests=dict(sections.get("inputs", {})), **kwargs)


def load_spec(path, seed: Optional[int] = None) -> ExperimentSpec:
    path = Path(path)
    try:
        sections = read_ini(path)
    except Exception as exc:
        raise ExperimentError(f"{path}: {exc}") from None
    return spec_from_sections(sections, path.parent, seed)


def manifest_text(spec: ExperimentSpec, digests: Dict[str, str]) -> str:
    sections = spec.sections()
    sections["inputs"] = digests
    return write_ini(sections)


def verify_digests(spec: ExperimentSpec) -> Dict[str, str]:
    """Digest every input; a mismatch against digests recorded in the experiment file is fatal."""
    digests = {}
    for key, path in spec.input_files():
        if not Path(path).is_file():
            raise ExperimentError(f"input {key} not found: {path}")
        digests[key] = sha256_file(path)
        expected = spec.digests.get(key)
        if expected is not None and expected != digests[key]:
            raise ExperimentError(f"input {key} ({path}) changed since the manifest was written")
    return digests


def infer_test_target(test: Sequence[Instance], given: str = "") -> str:
    if given:
        return given
    targets = sorted({i.target for i in test})
    if len(targets) != 1:
        raise ExperimentError(f"test corpus has targets {targets}; set test_target explicitly")
    return targets[0]


def check_unseen(target: str, **corpora: Sequence[Instance]) -> None:
    """Abort when a human-labeled train or dev instance is about the test target."""
    key = target.strip().lower()
    for name, data in corpora.items():
        hits = [i.id for i in data if i.target.strip().lower() == key]
        if hits:
            raise ExperimentError(f"protocol violation: {len(hits)} {name} instance(s) have the test "
                                  f"target {target!r} (first id {hits[0]})")


@dataclass
class ExperimentResult:
    report: EvalReport
    predictions: List[Instance]
    history: object
    model: object
    files: Dict[str, bytes] = field(default_factory=dict)


def pretrained_table(spec: ExperimentSpec, extra_text: Sequence[str],
                     log: Callable[[str], None]) -> Tuple[Optional[EmbeddingTable], Optional[str]]:
    if spec.embeddings:
        return load_embeddings(spec.embeddings), None
    if not spec.pretrain_corpus:
        return None, None
    cfg = spec.skipgram or SkipgramConfig(dim=spec.model.input_dim, seed=spec.seed)
    if cfg.dim != spec.model.input_dim:
        raise ExperimentError(f"skipgram dim {cfg.dim} differs from model input_dim {spec.model.input_dim}")
    lines = [t for p in spec.pretrain_corpus for t in read_tweets(p)] + list(extra_text)
    log(f"pretraining skip-gram on {len(lines)} texts")
    res = train_skipgram((tokenize(t) for t in lines), cfg)
    return res.table, "embeddings.txt"


def run_experiment(spec: ExperimentSpec, out_dir=None,
                   log: Callable[[str], None] = lambda s: None) -> ExperimentResult:
    """Train, select on dev, evaluate on test and (optionally) write outputs.

    Outputs: ``report.txt``, ``report.json``, ``predictions.tsv``,
    ``history.jsonl``, ``history.txt``, ``model.bin`` and ``manifest.ini``;
    ``autolabeled.tsv`` in weakly supervised mode and ``embeddings.txt`` when
    embeddings were pretrained. Nothing time-dependent is written.
    """
    digests = verify_digests(spec)
    test = parse_semeval_tsv(spec.test)
    if not test:
        raise ExperimentError("test corpus is empty")
    target = infer_test_target(test, spec.test_target)
    train = parse_semeval_tsv(spec.train) if spec.train else []
    dev = parse_semeval_tsv(spec.dev) if spec.dev else []
    check_unseen(target, train=train, dev=dev)

    files: Dict[str, bytes] = {}
    if spec.mode == WEAKLY_SUPERVISED:
        rules = compile_rules(spec.rules or None, seed=spec.seed)
        auto, counts = label_corpus(read_lines(spec.unlabeled), rules, target=target)
        log("auto-labeled " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
        if not auto:
            raise ExperimentError("the rules labeled no tweet of the unlabeled corpus")
        files["autolabeled.tsv"] = format_tsv(auto).encode("utf-8")
        train = train + auto

    # the official labeled tweets join the pretraining corpus
    extra = [i.tweet for i in train + dev + test] if spec.pretrain_corpus else []
    pretrained, emb_file = pretrained_table(spec, extra, log)
    if emb_file:
        files[emb_file] = format_embeddings(pretrained).encode("utf-8")

    log(f"training {spec.model.variant} on {len(train)} instances, dev {len(dev)}, test {len(test)}")
    tm, history = train_supervised(train, dev, spec.model, pretrained, log=log)
    report, labels = evaluate_on(test, tm)
    preds = [dataclasses.replace(inst, stance=lab) for inst, lab in zip(test, labels)]

    files.update({
        "report.txt": report_table([(spec.label(), report)]).encode("utf-8"),
        "report.json": (json.dumps({"method": spec.label(), "test_target": target, **report.to_dict()},
                                   sort_keys=True, indent=2) + "\n").encode("utf-8"),
        "predictions.tsv": format_tsv(preds).encode("utf-8"),
        "history.jsonl": history.to_jsonl().encode("utf-8"),
        "history.txt": history.to_table().encode("utf-8"),
        "model.bin": checkpoint_bytes(tm),
        "manifest.ini": manifest_text(spec, digests).encode("utf-8"),
    })
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, data in files.items():
            (out / name).write_bytes(data)
    return ExperimentResult(report, preds, history, tm, files)
