"""Reading and writing SemEval-style ``ID<TAB>Target<TAB>Tweet<TAB>Stance`` files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

from .metrics import LABELS

HEADER = "ID\tTarget\tTweet\tStance"
UNLABELED = "UNKNOWN"


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Instance:
    id: str
    target: str
    tweet: str
    stance: Optional[str] = None

    def __post_init__(self):
        if self.stance is not None and self.stance not in LABELS:
            raise CorpusError(f"unknown stance {self.stance!r}")
        if not self.tweet:
            raise CorpusError(f"instance {self.id}: empty tweet")


def parse_semeval_tsv(path, allow_unlabeled: bool = False) -> List[Instance]:
    """Parse a SemEval stance file. Exactly one header line is skipped.

    With ``allow_unlabeled`` the literal ``UNKNOWN`` is accepted and stored as
    ``stance=None``.
    """
    out = []
    with open(path, encoding="utf-8-sig", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if lineno == 1:
                continue
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise CorpusError(f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}")
            id_, target, tweet, stance = (f.strip() for f in fields)
            if stance == UNLABELED and allow_unlabeled:
                stance = None
            elif stance not in LABELS:
                raise CorpusError(f"{path}:{lineno}: unknown stance {stance!r}")
            if not tweet:
                raise CorpusError(f"{path}:{lineno}: empty tweet")
            out.append(Instance(id_, target, tweet, stance))
    return out


def format_tsv(instances: Iterable[Instance]) -> str:
    lines = [HEADER]
    for inst in instances:
        for value in (inst.id, inst.target, inst.tweet):
            if "\t" in value or "\n" in value:
                raise CorpusError(f"instance {inst.id}: tabs/newlines cannot be written to TSV")
        lines.append(f"{inst.id}\t{inst.target}\t{inst.tweet}\t{inst.stance or UNLABELED}")
    return "\n".join(lines) + "\n"


def write_semeval_tsv(instances: Iterable[Instance], path) -> None:
    Path(path).write_text(format_tsv(instances), encoding="utf-8", newline="")


def read_lines(path) -> List[str]:
    """Raw text corpus, one tweet per line; blank lines dropped."""
    with open(path, encoding="utf-8-sig") as fh:
        return [ln.rstrip("\r\n") for ln in fh if ln.strip()]


def read_tweets(path) -> List[str]:
    """Tweets of either a SemEval TSV (detected by its header) or a plain text file."""
    with open(path, encoding="utf-8-sig") as fh:
        first = fh.readline()
    if first.rstrip("\r\n").split("\t")[:3] == ["ID", "Target", "Tweet"]:
        return [inst.tweet for inst in parse_semeval_tsv(path, allow_unlabeled=True)]
    return read_lines(path)
