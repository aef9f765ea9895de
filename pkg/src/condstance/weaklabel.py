"""Regex-based automatic stance annotation for an unlabeled target corpus."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, Iterable, List, Tuple

import numpy as np

from .corpus import Instance

DISCARD = "DISCARD"
DEFAULT_NEUTRAL_RATE = 0.02


class RuleError(ValueError):
    pass


@dataclass
class RuleSet:
    positive: List[str] = field(default_factory=list)
    negative: List[str] = field(default_factory=list)
    neutral_rate: float = DEFAULT_NEUTRAL_RATE
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.neutral_rate <= 1.0:
            raise RuleError(f"neutral_rate must lie in [0, 1], got {self.neutral_rate}")
        self.positive = list(dict.fromkeys(self.positive))
        self.negative = list(dict.fromkeys(self.negative))
        self._pos = [re.compile(p, re.IGNORECASE) for p in self.positive]
        self._neg = [re.compile(p, re.IGNORECASE) for p in self.negative]

    def is_positive(self, text: str) -> bool:
        return any(rx.search(text) for rx in self._pos)

    def is_negative(self, text: str) -> bool:
        return any(rx.search(text) for rx in self._neg)


def parse_rules(text: str, seed: int = 0, source: str = "<rules>") -> RuleSet:
    """Parse a rule file body.

    Sections ``[positive]``, ``[negative]`` and ``[meta]``; one regex per line;
    lines starting with ``#`` are comments, so a literal hash is written ``\\#``.
    """
    section = None
    pos: List[str] = []
    neg: List[str] = []
    rate = DEFAULT_NEUTRAL_RATE
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in ("positive", "negative", "meta"):
                raise RuleError(f"{source}:{lineno}: unknown section [{section}]")
            continue
        if section is None:
            raise RuleError(f"{source}:{lineno}: pattern outside of a section")
        if section == "meta":
            key, sep, value = line.partition("=")
            if not sep or key.strip() != "neutral_rate":
                raise RuleError(f"{source}:{lineno}: expected 'neutral_rate=<real>'")
            try:
                rate = float(value)
            except ValueError:
                raise RuleError(f"{source}:{lineno}: bad neutral_rate {value.strip()!r}") from None
            continue
        try:
            re.compile(line, re.IGNORECASE)
        except re.error as exc:
            raise RuleError(f"{source}:{lineno}: malformed pattern {line!r}: {exc}") from None
        (pos if section == "positive" else neg).append(line)
    try:
        return RuleSet(pos, neg, rate, seed)
    except RuleError as exc:
        raise RuleError(f"{source}: {exc}") from None


def compile_rules(path=None, seed: int = 0) -> RuleSet:
    """Load a rule file; ``None`` loads the shipped Donald Trump rules."""
    if path is None:
        text = resources.files("condstance").joinpath("data/trump_rules.txt").read_text(encoding="utf-8")
        return parse_rules(text, seed, "trump_rules.txt")
    with open(path, encoding="utf-8") as fh:
        return parse_rules(fh.read(), seed, str(path))


def label_tweet(text: str, rules: RuleSet, rng: np.random.Generator) -> str:
    """FAVOR if any positive pattern matches, else AGAINST on a negative match,
    else NONE with probability ``rules.neutral_rate``, else DISCARD."""
    low = text.lower()
    if rules.is_positive(low):
        return "FAVOR"
    if rules.is_negative(low):
        return "AGAINST"
    return "NONE" if rng.random() < rules.neutral_rate else DISCARD


def line_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def label_corpus(lines: Iterable[str], rules: RuleSet, target: str = "Donald Trump",
                 id_prefix: str = "auto") -> Tuple[List[Instance], Dict[str, int]]:
    """Label every line with its own generator seeded by ``(rules.seed, line index)``."""
    out = []
    counts = Counter({"FAVOR": 0, "AGAINST": 0, "NONE": 0})
    for i, line in enumerate(lines):
        text = " ".join(line.split())
        if not text:
            continue
        label = label_tweet(text, rules, line_rng(rules.seed, i))
        if label == DISCARD:
            counts[DISCARD] += 1
            continue
        counts[label] += 1
        out.append(Instance(f"{id_prefix}{i}", target, text, label))
    return out, dict(counts)
