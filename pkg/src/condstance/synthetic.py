"""Synthetic target-dependence benchmark.

Every tweet carries one of two keywords and is paired with both targets, and
the gold label changes with the target. "sunrise" is a rivalry word: it favours
the first target and opposes the second. "thunder" concerns only the second
target, which it favours. A model blind to the target sees every tweet under two
labels; with keyword-balanced splits its best possible macro-F1 is 7/12.
"""

from __future__ import annotations

from typing import List, Tuple

import numpy as np

from .corpus import Instance

TARGETS = ("Atlantis Union", "Borealis League")
KEYWORDS = ("sunrise", "thunder")
FILLERS = tuple(f"w{i:02d}" for i in range(30))

# (target, keyword) -> label
LABEL_TABLE = {
    (0, 0): "FAVOR", (1, 0): "AGAINST",
    (0, 1): "NONE", (1, 1): "FAVOR",
}
BLIND_CEILING = 7 / 12


def make_tweets(per_keyword: int, rng: np.random.Generator, min_len: int = 4,
                max_len: int = 6) -> List[Tuple[str, int]]:
    tweets = []
    for kw in range(len(KEYWORDS)):
        for _ in range(per_keyword):
            n = int(rng.integers(min_len, max_len + 1))
            words = list(rng.choice(FILLERS, n - 1))
            words.insert(int(rng.integers(0, n)), KEYWORDS[kw])
            tweets.append((" ".join(words), kw))
    return tweets


def pair_up(tweets, start_id: int = 0) -> List[Instance]:
    out = []
    for n, (text, kw) in enumerate(tweets):
        for t, target in enumerate(TARGETS):
            out.append(Instance(str(start_id + 2 * n + t), target, text, LABEL_TABLE[(t, kw)]))
    return out


def target_dependence_benchmark(seed: int = 0, per_keyword: int = 200,
                                fractions=(0.6, 0.15, 0.25)):
    """Return ``(train, dev, test)``.

    Split by tweet, so test tweets are unseen, and stratified by keyword, so
    every split holds both keywords in equal number.
    """
    rng = np.random.default_rng(seed)
    tweets = make_tweets(per_keyword, rng)
    n_train = int(round(fractions[0] * per_keyword))
    n_dev = int(round(fractions[1] * per_keyword))
    parts: List[List[Tuple[str, int]]] = [[], [], []]
    for kw in range(len(KEYWORDS)):
        block = tweets[kw * per_keyword:(kw + 1) * per_keyword]
        order = rng.permutation(per_keyword)
        for part, idx in zip(parts, (order[:n_train], order[n_train:n_train + n_dev],
                                     order[n_train + n_dev:])):
            part.extend(block[i] for i in idx)
    out, offset = [], 0
    for part in parts:
        part = [part[i] for i in rng.permutation(len(part))]
        out.append(pair_up(part, offset))
        offset += 2 * len(part)
    return tuple(out)
