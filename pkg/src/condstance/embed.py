"""Skip-gram pretraining and embedding tables.

The trainer is skip-gram with negative sampling, single-threaded and fully
deterministic for a given seed: window sizes and negative draws come from a
64-bit linear congruential generator seeded from ``SkipgramConfig.seed``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numba
import numpy as np

from .textprep import UNK, Vocab, build_vocab

RANDOM, PRE_FIXED, PRE_CONT = "Random", "PreFixed", "PreCont"
MODES = (RANDOM, PRE_FIXED, PRE_CONT)
SING, SEP = "Sing", "Sep"
INIT_RANGE = 0.1


@dataclass
class SkipgramConfig:
    dim: int = 100
    window: int = 5
    min_count: int = 5
    negatives: int = 5
    epochs: int = 5
    start_lr: float = 0.025
    seed: int = 1

    def __post_init__(self):
        if self.dim < 1 or self.window < 1 or self.negatives < 1 or self.epochs < 1:
            raise ValueError(f"invalid skip-gram config: {self}")


@dataclass
class EmbeddingTable:
    vectors: np.ndarray
    vocab: Vocab
    mode: str = RANDOM
    trainable: bool = True

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ValueError(f"table shape {self.vectors.shape} does not match vocabulary of {len(self.vocab)}")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


class EmbeddingSet:
    """Target/tweet lookup tables; under ``Sing`` both sides are one object."""

    def __init__(self, target: EmbeddingTable, tweet: Optional[EmbeddingTable] = None):
        self.sharing = SING if tweet is None or tweet is target else SEP
        self.tables = {"target": target, "tweet": tweet if tweet is not None else target}

    def table_for(self, side: str) -> EmbeddingTable:
        return self.tables[side]


def lookup(table: EmbeddingTable, indices: Sequence[int]) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.vectors.shape[0]):
        raise IndexError(f"embedding index out of range [0, {table.vectors.shape[0]})")
    return table.vectors[idx]


def random_vectors(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-INIT_RANGE, INIT_RANGE, size=(n, dim))


def init_table(vocab: Vocab, mode: str, dim: Optional[int] = None,
               pretrained: Optional[EmbeddingTable] = None, seed: int = 0) -> EmbeddingTable:
    """Build the lookup table used by a stance model.

    Rows for tokens missing from ``pretrained`` (always including the case
    ``mode == Random``) are drawn uniformly from [-0.1, 0.1].
    """
    if mode not in MODES:
        raise ValueError(f"unknown embedding mode {mode!r}")
    rng = np.random.default_rng(seed)
    if mode == RANDOM:
        if dim is None:
            dim = pretrained.dim if pretrained is not None else None
        if dim is None:
            raise ValueError("Random initialisation needs a dimension")
        return EmbeddingTable(random_vectors(len(vocab), dim, rng), vocab, RANDOM, True)
    if pretrained is None:
        raise ValueError(f"{mode} initialisation needs pretrained vectors")
    if dim is not None and dim != pretrained.dim:
        raise ValueError(f"model expects {dim}-d embeddings, pretrained vectors are {pretrained.dim}-d")
    vectors = random_vectors(len(vocab), pretrained.dim, rng)
    for i, tok in enumerate(vocab.itos):
        j = pretrained.vocab.stoi.get(tok)
        if j is not None:
            vectors[i] = pretrained.vectors[j]
    return EmbeddingTable(vectors, vocab, mode, mode == PRE_CONT)


# --------------------------------------------------------------------------
# embedding text files

def format_embeddings(table: EmbeddingTable) -> str:
    """word2vec text format; 17 significant digits make the round trip exact."""
    lines = [f"{len(table.vocab)} {table.dim}"]
    for tok, row in zip(table.vocab.itos, table.vectors):
        lines.append(tok + " " + " ".join(format(float(x), ".17g") for x in row))
    return "\n".join(lines) + "\n"


def save_embeddings(table: EmbeddingTable, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_embeddings(table))


def load_embeddings(path) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: bad header, expected '<vocab_size> <dim>'")
        n, dim = int(header[0]), int(header[1])
        tokens: List[str] = []
        vectors = np.empty((n, dim))
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            if len(tokens) >= n:
                raise ValueError(f"{path}:{lineno}: more rows than the header announces")
            vectors[len(tokens)] = [float(x) for x in parts[1:]]
            tokens.append(parts[0])
    if len(tokens) != n:
        raise ValueError(f"{path}: header announces {n} rows, found {len(tokens)}")
    if UNK not in tokens:
        # foreign files: give them an UNK row at index 0
        tokens = [UNK] + tokens
        vectors = np.vstack([np.zeros((1, dim)), vectors])
    elif tokens[0] != UNK:
        j = tokens.index(UNK)
        order = [j] + [i for i in range(len(tokens)) if i != j]
        tokens = [tokens[i] for i in order]
        vectors = vectors[order]
    return EmbeddingTable(vectors, Vocab(tokens), PRE_FIXED, False)


# --------------------------------------------------------------------------
# skip-gram with negative sampling

_TABLE_SIZE = 1_000_000


@numba.njit(cache=True)
def _lcg(state):
    return state * np.uint64(25214903917) + np.uint64(11)


@numba.njit(cache=True)
def _draw_windows(n_tokens, window, epochs, seed):
    out = np.empty((epochs, n_tokens), dtype=np.int32)
    state = np.uint64(seed)
    for e in range(epochs):
        for i in range(n_tokens):
            state = _lcg(state)
            out[e, i] = 1 + np.int64((state >> np.uint64(16)) % np.uint64(window))
    return out


@numba.njit(cache=True)
def _count_pairs(tokens, starts, windows):
    total = 0
    n_sent = starts.shape[0] - 1
    for e in range(windows.shape[0]):
        for s in range(n_sent):
            lo, hi = starts[s], starts[s + 1]
            for i in range(lo, hi):
                b = windows[e, i]
                a = max(lo, i - b)
                z = min(hi, i + b + 1)
                total += (z - a) - 1
    return total


@numba.njit(cache=True)
def _sgns_train(tokens, starts, windows, w_in, w_out, neg_table, negatives,
                start_lr, total_pairs, seed):
    dim = w_in.shape[1]
    grad_in = np.empty(dim)
    state = np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15)
    done = 0
    end_lr = start_lr / 100.0
    n_sent = starts.shape[0] - 1
    table_n = np.uint64(neg_table.shape[0])
    loss = 0.0
    for e in range(windows.shape[0]):
        for s in range(n_sent):
            lo, hi = starts[s], starts[s + 1]
            for i in range(lo, hi):
                center = tokens[i]
                b = windows[e, i]
                a = max(lo, i - b)
                z = min(hi, i + b + 1)
                for j in range(a, z):
                    if j == i:
                        continue
                    lr = start_lr - (start_lr - end_lr) * (done / total_pairs)
                    done += 1
                    ctx = tokens[j]
                    for q in range(dim):
                        grad_in[q] = 0.0
                    for d in range(negatives + 1):
                        if d == 0:
                            target = ctx
                            label = 1.0
                        else:
                            state = _lcg(state)
                            target = neg_table[(state >> np.uint64(16)) % table_n]
                            if target == ctx:
                                continue
                            label = 0.0
                        dot = 0.0
                        for q in range(dim):
                            dot += w_in[center, q] * w_out[target, q]
                        if dot > 30.0:
                            sig = 1.0
                        elif dot < -30.0:
                            sig = 0.0
                        else:
                            sig = 1.0 / (1.0 + np.exp(-dot))
                        if label == 1.0:
                            loss -= np.log(max(sig, 1e-12))
                        else:
                            loss -= np.log(max(1.0 - sig, 1e-12))
                        g = (label - sig) * lr
                        for q in range(dim):
                            grad_in[q] += g * w_out[target, q]
                            w_out[target, q] += g * w_in[center, q]
                    for q in range(dim):
                        w_in[center, q] += grad_in[q]
    return loss / max(done, 1)


def _noise_table(counts: np.ndarray, size: int = _TABLE_SIZE) -> np.ndarray:
    weights = counts.astype(np.float64) ** 0.75
    probs = weights / weights.sum()
    # deterministic layout: each word gets a block proportional to its weight
    reps = np.floor(probs * size).astype(np.int64)
    reps[reps == 0] = (probs[reps == 0] > 0).astype(np.int64)
    return np.repeat(np.arange(len(counts), dtype=np.int64), reps)


def flatten_corpus(corpus: Iterable[Sequence[str]], vocab: Vocab) -> Tuple[np.ndarray, np.ndarray]:
    ids: List[int] = []
    starts = [0]
    for seq in corpus:
        if len(seq) == 0:
            continue
        ids.extend(vocab.index(t) for t in seq)
        starts.append(len(ids))
    return np.array(ids, dtype=np.int64), np.array(starts, dtype=np.int64)


@dataclass
class SkipgramResult:
    table: EmbeddingTable
    total_pairs: int
    mean_loss: float


def train_skipgram(corpus: Iterable[Sequence[str]], cfg: SkipgramConfig = SkipgramConfig()) -> SkipgramResult:
    """Train input vectors with SGNS; returns a frozen (``PreFixed``) table.

    Tokens below ``cfg.min_count`` are mapped to UNK, which is trained like any
    other word. Only input vectors are exported.
    """
    corpus = [list(seq) for seq in corpus]
    if not corpus:
        raise ValueError("skip-gram corpus is empty")
    vocab = build_vocab(corpus, cfg.min_count)
    tokens, starts = flatten_corpus(corpus, vocab)
    windows = _draw_windows(len(tokens), cfg.window, cfg.epochs, np.uint64(cfg.seed))
    total = int(_count_pairs(tokens, starts, windows))
    if total == 0:
        raise ValueError("skip-gram corpus has no (center, context) pair; every sentence needs >= 2 tokens")
    counts = np.bincount(tokens, minlength=len(vocab))
    rng = np.random.default_rng(cfg.seed)
    w_in = (rng.random((len(vocab), cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((len(vocab), cfg.dim))
    loss = _sgns_train(tokens, starts, windows, w_in, w_out, _noise_table(counts),
                       cfg.negatives, cfg.start_lr, float(total), np.uint64(cfg.seed))
    return SkipgramResult(EmbeddingTable(w_in, vocab, PRE_FIXED, False), total, float(loss))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v) + 1e-300))
