"""Task metric, prediction post-processing and result tables."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .textprep import contains_target

LABELS = ("FAVOR", "AGAINST", "NONE")
FAVOR, AGAINST, NONE = range(3)
LABEL_INDEX = {name: i for i, name in enumerate(LABELS)}


def label_index(label) -> int:
    if isinstance(label, str):
        try:
            return LABEL_INDEX[label]
        except KeyError:
            raise ValueError(f"unknown stance label {label!r}") from None
    i = int(label)
    if not 0 <= i < 3:
        raise ValueError(f"stance index out of range: {label}")
    return i


@dataclass
class ClassScores:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    per_class: Dict[str, ClassScores]
    macro_f1: float
    n: int = 0
    confusion: List[List[int]] = field(default_factory=list)

    def __getitem__(self, label: str) -> ClassScores:
        return self.per_class[label]

    def to_dict(self) -> dict:
        return {"macro_f1": self.macro_f1, "n": self.n, "confusion": self.confusion,
                "per_class": {k: asdict(v) for k, v in self.per_class.items()}}


def per_class_prf(gold: Sequence, pred: Sequence) -> EvalReport:
    """One-vs-rest P/R/F1 for each class; macro-F1 averages FAVOR and AGAINST only.

    Zero denominators give 0 (never-predicted class has P=0, absent class R=0).
    """
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} labels but predictions have {len(pred)}")
    g = np.array([label_index(x) for x in gold], dtype=np.int64)
    p = np.array([label_index(x) for x in pred], dtype=np.int64)
    conf = np.zeros((3, 3), dtype=np.int64)
    np.add.at(conf, (g, p), 1)
    per_class = {}
    for c, name in enumerate(LABELS):
        tp = conf[c, c]
        n_pred = conf[:, c].sum()
        n_gold = conf[c, :].sum()
        prec = tp / n_pred if n_pred else 0.0
        rec = tp / n_gold if n_gold else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[name] = ClassScores(float(prec), float(rec), float(f1))
    macro = (per_class["FAVOR"].f1 + per_class["AGAINST"].f1) / 2
    return EvalReport(per_class, macro, len(g), conf.tolist())


def argmax_first(values: Sequence[float]) -> int:
    # np.argmax already returns the first maximum, i.e. FAVOR < AGAINST < NONE on ties
    return int(np.argmax(values))


def postprocess_one(probs: Sequence[float], tweet: str, target: str,
                    aliases: Iterable[str] = ()) -> int:
    if contains_target(tweet, target, aliases):
        return argmax_first(probs[:2])
    return argmax_first(probs)


def postprocess(predictions: Sequence[Sequence[float]], tweets: Sequence[str],
                targets, aliases=()) -> List[int]:
    """Argmax labels, restricted to FAVOR/AGAINST for tweets mentioning the target.

    ``targets`` is one target string for all rows or a per-row sequence;
    ``aliases`` is a list, or a dict keyed by lowercased target.
    """
    if isinstance(targets, str):
        targets = [targets] * len(tweets)
    out = []
    for probs, tweet, target in zip(predictions, tweets, targets):
        al = aliases.get(target.lower(), ()) if isinstance(aliases, dict) else aliases
        out.append(postprocess_one(probs, tweet, target, al))
    return out


def round4(x: float) -> str:
    return str(Decimal(repr(float(x))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


def report_rows(reports: Sequence[Tuple[str, EvalReport]]) -> List[List[str]]:
    rows = [["Method", "Stance", "P", "R", "F1"]]
    for method, rep in reports:
        for i, name in enumerate(("FAVOR", "AGAINST")):
            s = rep.per_class[name]
            rows.append([method if i == 0 else "", name, round4(s.precision), round4(s.recall), round4(s.f1)])
        rows.append(["", "Macro", "", "", round4(rep.macro_f1)])
    return rows


def report_table(reports: Sequence[Tuple[str, EvalReport]]) -> str:
    """Plain-text table, one block (FAVOR, AGAINST, Macro) per method."""
    rows = report_rows(reports)
    widths = [max(len(r[j]) for r in rows) for j in range(5)]
    lines = []
    for n, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) if j < 2 else cell.rjust(w)
                               for j, (cell, w) in enumerate(zip(row, widths))).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def accuracy(gold: Sequence, pred: Sequence) -> float:
    if not gold:
        raise ValueError("accuracy of an empty set")
    return float(np.mean([label_index(a) == label_index(b) for a, b in zip(gold, pred)]))


def subset(report_gold, report_pred, mask: Sequence[bool]) -> Optional[EvalReport]:
    g = [x for x, m in zip(report_gold, mask) if m]
    p = [x for x, m in zip(report_pred, mask) if m]
    return per_class_prf(g, p) if g else None
