"""Tweet tokenization, vocabulary construction and target mention checks."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

UNK = "<unk>"
UNK_INDEX = 0

DEFAULT_STOPWORDS = frozenset({"rt", "#semst", "via"})

# matched against whole whitespace-delimited chunks, after lowercasing
EMOTICONS = frozenset({
    ":)", ":-)", ":(", ":-(", ":d", ":-d", ";)", ";-)", ":p", ":-p", ":o", ":-o",
    ":/", ":-/", ":'(", ":|", ":*", "=)", "=(", "=d", "<3", "</3", "xd", "^_^",
    "-_-", "^^", "o_o", ":]", ":[", ";d", ":')",
})

_URL_RE = re.compile(r"^(?:https?://|[\w-]+(?:\.[\w-]+)+/)", re.UNICODE)
_PIECE_RE = re.compile(
    r"(?P<url>https?://\S+|[\w-]+(?:\.[\w-]+)+/\S*)"
    r"|(?P<tag>[#@]\w+)"
    r"|(?P<word>\w+(?:['’]\w+)*)"
    r"|(?P<punct>[^\s\w])",
    re.UNICODE,
)


def is_url(token: str) -> bool:
    return bool(_URL_RE.match(token))


def is_punctuation(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def split_pieces(text: str) -> List[str]:
    """Rule-based split into raw pieces; nothing is filtered yet."""
    pieces = []
    for chunk in text.split():
        if chunk.lower() in EMOTICONS:
            pieces.append(chunk)
            continue
        pieces.extend(m.group(0) for m in _PIECE_RE.finditer(chunk))
    return pieces


def tokenize(text: str, stopwords: Iterable[str] = DEFAULT_STOPWORDS) -> List[str]:
    """Lowercased, filtered token sequence for a tweet or target string.

    URLs, punctuation-only pieces and the Twitter stopwords are dropped;
    hashtags, mentions, numbers and the built-in emoticons survive.
    """
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else frozenset(stopwords)
    # Lowercasing before splitting keeps re-tokenization stable for characters
    # whose lowercase form expands (e.g. dotted capital I).
    out = []
    for piece in split_pieces(text.lower()):
        if piece in EMOTICONS:
            out.append(piece)
        elif is_url(piece) or is_punctuation(piece) or piece in stop:
            continue
        else:
            out.append(piece)
    return out


def load_wordlist(path) -> List[str]:
    """One entry per line, UTF-8; blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip()]


@dataclass
class Vocab:
    itos: List[str]
    min_count: int = 1
    stoi: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if not self.itos or self.itos[0] != UNK:
            raise ValueError("vocabulary must start with the UNK token")
        self.stoi = {tok: i for i, tok in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("vocabulary contains duplicate tokens")

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def index(self, token: str) -> int:
        return self.stoi.get(token, UNK_INDEX)

    def extended(self, tokens: Iterable[str]) -> "Vocab":
        """New vocabulary with unseen ``tokens`` appended in the given order."""
        itos = list(self.itos)
        seen = set(itos)
        for tok in tokens:
            if tok not in seen:
                seen.add(tok)
                itos.append(tok)
        return Vocab(itos, self.min_count)


def count_tokens(corpus: Iterable[Sequence[str]]) -> Counter:
    counts = Counter()
    for seq in corpus:
        counts.update(seq)
    return counts


def build_vocab(corpus: Iterable[Sequence[str]], min_count: int = 5) -> Vocab:
    """UNK at 0, then tokens seen ``min_count``+ times by (count desc, token asc)."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = count_tokens(corpus)
    counts.pop(UNK, None)
    kept = sorted((tok for tok, n in counts.items() if n >= min_count),
                  key=lambda tok: (-counts[tok], tok))
    return Vocab([UNK] + kept, min_count)


def encode(seq: Sequence[str], vocab: Vocab) -> np.ndarray:
    return np.array([vocab.index(tok) for tok in seq], dtype=np.int64)


def contains_target(tweet: str, target: str, aliases: Optional[Iterable[str]] = ()) -> bool:
    text = tweet.lower()
    if target and target.lower() in text:
        return True
    return any(a and a.lower() in text for a in (aliases or ()))
