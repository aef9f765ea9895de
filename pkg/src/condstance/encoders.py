"""LSTM encoders and the stance classifiers built from them.

Variants:

* ``TweetOnly``    - one LSTM over the tweet
* ``Concat``       - independent target and tweet LSTMs, joint projection
* ``TweetCondTar`` - tweet LSTM starts from the target LSTM's final cell
* ``TarCondTweet`` - the same with the roles swapped
* ``BiCond``       - forward and reversed target encoders seed forward and
                     reversed tweet encoders
* ``BoWV``         - mean word vectors of tweet and target, softmax regression

The conditional hand-off passes the memory cell ``c`` and restarts the hidden
output ``h`` from zeros (``carry_h=True`` passes both).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .numcore import ShapeError, cross_entropy, dropout_mask, is_clamped, softmax

TWEET_ONLY = "TweetOnly"
CONCAT = "Concat"
TAR_COND_TWEET = "TarCondTweet"
TWEET_COND_TAR = "TweetCondTar"
BICOND = "BiCond"
BOWV = "BoWV"
VARIANTS = (TWEET_ONLY, CONCAT, TAR_COND_TWEET, TWEET_COND_TAR, BICOND, BOWV)
LSTM_VARIANTS = VARIANTS[:-1]

GATES = ("i", "f", "o", "c")
INIT_RANGE = 0.1
FORGET_BIAS = 1.0
N_CLASSES = 3


class LstmState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


def zero_state(k: int) -> LstmState:
    return LstmState(np.zeros(k), np.zeros(k))


@dataclass
class LstmParams:
    Wi: np.ndarray
    Wf: np.ndarray
    Wo: np.ndarray
    Wc: np.ndarray
    bi: np.ndarray
    bf: np.ndarray
    bo: np.ndarray
    bc: np.ndarray

    @property
    def k(self) -> int:
        return self.Wi.shape[0]

    @property
    def d(self) -> int:
        return self.Wi.shape[1] - self.Wi.shape[0]

    def stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        return (np.vstack([self.Wi, self.Wf, self.Wo, self.Wc]),
                np.concatenate([self.bi, self.bf, self.bo, self.bc]))

    @classmethod
    def from_params(cls, params: Dict[str, np.ndarray], prefix: str) -> "LstmParams":
        return cls(*(params[f"{prefix}.{n}"] for n in lstm_block_names()))

    @classmethod
    def zeros(cls, d: int, k: int) -> "LstmParams":
        return cls(*[np.zeros((k, d + k)) for _ in GATES], *[np.zeros(k) for _ in GATES])

    @classmethod
    def random(cls, d: int, k: int, rng: np.random.Generator, scale: float = INIT_RANGE,
               forget_bias: float = FORGET_BIAS) -> "LstmParams":
        Ws = [rng.uniform(-scale, scale, (k, d + k)) for _ in GATES]
        bs = [np.zeros(k) for _ in GATES]
        bs[1] += forget_bias
        return cls(*Ws, *bs)

    def as_dict(self, prefix: str) -> Dict[str, np.ndarray]:
        return {f"{prefix}.{n}": getattr(self, n) for n in lstm_block_names()}


def lstm_block_names() -> List[str]:
    return [f"W{g}" for g in GATES] + [f"b{g}" for g in GATES]


# --------------------------------------------------------------------------
# cell and recurrence

class StepCache(NamedTuple):
    H: np.ndarray
    s: np.ndarray       # sigmoid gates i, f, o stacked (3k)
    g: np.ndarray       # candidate tanh(W^c H + b^c)
    c_prev: np.ndarray
    tc: np.ndarray      # tanh(c_t)


def _cell(x, h, c, W, b, k):
    H = np.concatenate((x, h))
    z = W @ H + b
    s = 0.5 * (1.0 + np.tanh(0.5 * z[:3 * k]))
    g = np.tanh(z[3 * k:])
    c_new = s[k:2 * k] * c + s[:k] * g
    tc = np.tanh(c_new)
    h_new = s[2 * k:] * tc
    return h_new, c_new, StepCache(H, s, g, c, tc)


def _cell_backward(dh, dc, st: StepCache, W, k):
    s, g, tc = st.s, st.g, st.tc
    i, f, o = s[:k], s[k:2 * k], s[2 * k:]
    dct = dc + dh * o * (1.0 - tc * tc)
    ds = np.concatenate((dct * g, dct * st.c_prev, dh * tc))
    dz = np.concatenate((ds * s * (1.0 - s), dct * i * (1.0 - g * g)))
    dH = W.T @ dz
    return dz, dH, dct * f


def _check_shapes(d: int, k: int, W: np.ndarray, b: np.ndarray) -> None:
    if W.shape != (4 * k, d + k) or b.shape != (4 * k,):
        raise ShapeError(f"LSTM expects W of shape {(4 * k, d + k)} and b of {(4 * k,)}, "
                         f"got {W.shape} and {b.shape}")


def lstm_cell(x, prev: LstmState, p: LstmParams, cache: Optional[list] = None) -> LstmState:
    """One LSTM step. Appends the activations to ``cache`` when given."""
    x = np.asarray(x, dtype=np.float64)
    W, b = p.stacked()
    k = p.k
    if x.shape != (p.d,) or prev.h.shape != (k,) or prev.c.shape != (k,):
        raise ShapeError(f"lstm_cell: x {x.shape}, h {prev.h.shape}, c {prev.c.shape} "
                         f"do not fit d={p.d}, k={k}")
    h, c, st = _cell(x, prev.h, prev.c, W, b, k)
    if cache is not None:
        cache.append(st)
    return LstmState(h, c)


def lstm_cell_backward(dh, dc, st: StepCache, p: LstmParams):
    """Returns ``(grads, dx, dh_prev, dc_prev)`` for one cached step."""
    W, _ = p.stacked()
    k, d = p.k, p.d
    dz, dH, dc_prev = _cell_backward(dh, dc, st, W, k)
    dW = np.outer(dz, st.H)
    grads = {}
    for j, gname in enumerate(GATES):
        grads[f"W{gname}"] = dW[j * k:(j + 1) * k]
        grads[f"b{gname}"] = dz[j * k:(j + 1) * k]
    return grads, dH[:d], dH[d:], dc_prev


@dataclass
class LstmRun:
    states: List[LstmState]     # in processing order
    cache: List[StepCache]
    reverse: bool
    W: np.ndarray
    d: int
    k: int

    @property
    def final(self) -> LstmState:
        return self.states[-1]


def run_lstm(xs, start: LstmState, p, reverse: bool = False) -> LstmRun:
    """Fold the cell over ``xs`` (back to front when ``reverse``).

    ``p`` is either an :class:`LstmParams` or a pre-stacked ``(W, b)`` pair.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 2 or xs.shape[0] == 0:
        raise ValueError("run_lstm needs a non-empty (length, dim) sequence")
    W, b = p.stacked() if isinstance(p, LstmParams) else p
    k = b.shape[0] // 4
    d = xs.shape[1]
    _check_shapes(d, k, W, b)
    h, c = start
    states, cache = [], []
    order = range(xs.shape[0] - 1, -1, -1) if reverse else range(xs.shape[0])
    for t in order:
        h, c, st = _cell(xs[t], h, c, W, b, k)
        states.append(LstmState(h, c))
        cache.append(st)
    return LstmRun(states, cache, reverse, W, d, k)


def run_lstm_backward(run: LstmRun, dh_final, dc_final, dhs=None):
    """Back-propagate through a whole run.

    ``dhs`` optionally holds extra gradients for every emitted ``h`` (rows in
    processing order). Returns ``(dW, db, dxs, dh0, dc0)`` with ``dW``/``db``
    in stacked gate layout and ``dxs`` in the original input order.
    """
    k, d, W = run.k, run.d, run.W
    n = len(run.cache)
    dh = np.array(dh_final, dtype=np.float64)
    dc = np.array(dc_final, dtype=np.float64)
    dZ = np.empty((n, 4 * k))
    Hs = np.empty((n, d + k))
    dxs = np.empty((n, d))
    for t in range(n - 1, -1, -1):
        if dhs is not None:
            dh = dh + dhs[t]
        st = run.cache[t]
        dz, dH, dc = _cell_backward(dh, dc, st, W, k)
        dZ[t] = dz
        Hs[t] = st.H
        dxs[t] = dH[:d]
        dh = dH[d:]
    if run.reverse:
        dxs = dxs[::-1]
    return dZ.T @ Hs, dZ.sum(axis=0), dxs, dh, dc


def split_stacked(prefix: str, dW: np.ndarray, db: np.ndarray, k: int) -> Dict[str, np.ndarray]:
    out = {}
    for j, g in enumerate(GATES):
        out[f"{prefix}.W{g}"] = dW[j * k:(j + 1) * k]
        out[f"{prefix}.b{g}"] = db[j * k:(j + 1) * k]
    return out


# --------------------------------------------------------------------------
# models

def lstm_names(variant: str) -> List[str]:
    if variant == TWEET_ONLY:
        return ["tweet_fw"]
    if variant in (CONCAT, TAR_COND_TWEET, TWEET_COND_TAR):
        return ["target_fw", "tweet_fw"]
    if variant == BICOND:
        return ["target_fw", "target_bw", "tweet_fw", "tweet_bw"]
    if variant == BOWV:
        return []
    raise ValueError(f"unknown variant {variant!r}")


def embedding_names(sharing: str) -> List[str]:
    return ["emb"] if sharing == "Sing" else ["emb.target", "emb.tweet"]


def bowv_features(target_vecs: np.ndarray, tweet_vecs: np.ndarray) -> np.ndarray:
    """``concat(mean tweet vector, mean target vector)``."""
    if len(target_vecs) == 0 or len(tweet_vecs) == 0:
        raise ValueError("bag-of-word-vectors features need non-empty target and tweet")
    return np.concatenate((np.mean(tweet_vecs, axis=0), np.mean(target_vecs, axis=0)))


@dataclass
class Forward:
    scores: np.ndarray          # pre-softmax values
    probs: np.ndarray
    cache: dict


class StanceModel:
    """A stance classifier with its parameters held in one ordered dict.

    ``params`` maps block names to float64 arrays; ``frozen`` lists blocks the
    optimizer must leave alone (pretrained-fixed embeddings, and always the
    embeddings of the BoWV baseline).
    """

    def __init__(self, variant: str, input_dim: int, hidden_k: int, vocab_size: int,
                 sharing: str = "Sing", head_bias: bool = True, carry_h: bool = False,
                 emb_trainable: bool = True, dropout: float = 0.0, l2: float = 0.0):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
        if sharing not in ("Sing", "Sep"):
            raise ValueError(f"sharing must be Sing or Sep, got {sharing!r}")
        self.variant = variant
        self.d = input_dim
        self.k = hidden_k
        self.vocab_size = vocab_size
        self.sharing = sharing
        self.head_bias = head_bias
        self.carry_h = carry_h
        self.dropout = dropout
        self.l2 = l2
        self.params: Dict[str, np.ndarray] = {}
        self.frozen = set()
        if not emb_trainable or variant == BOWV:
            self.frozen.update(embedding_names(sharing))

    # -- layout ------------------------------------------------------------

    def block_shapes(self) -> List[Tuple[str, Tuple[int, ...]]]:
        d, k, V = self.d, self.k, self.vocab_size
        out = [(name, (V, d)) for name in embedding_names(self.sharing)]
        for lstm in lstm_names(self.variant):
            out += [(f"{lstm}.W{g}", (k, d + k)) for g in GATES]
            out += [(f"{lstm}.b{g}", (k,)) for g in GATES]
        if self.variant == CONCAT:
            out += [("head.W_ta", (N_CLASSES, k)), ("head.W_tw", (N_CLASSES, k))]
        elif self.variant == BICOND:
            out.append(("head.W", (N_CLASSES, 2 * k)))
        elif self.variant == BOWV:
            out.append(("head.W", (N_CLASSES, 2 * d)))
        else:
            out.append(("head.W", (N_CLASSES, k)))
        if self.head_bias:
            out.append(("head.b", (N_CLASSES,)))
        return out

    @property
    def trainable(self) -> List[str]:
        return [n for n, _ in self.block_shapes() if n not in self.frozen]

    def init_params(self, rng: np.random.Generator, target_table: np.ndarray,
                    tweet_table: Optional[np.ndarray] = None) -> None:
        """Uniform [-0.1, 0.1] weights, forget-gate bias 1, other biases 0."""
        params = {}
        for name, shape in self.block_shapes():
            if name.startswith("emb"):
                src = tweet_table if name == "emb.tweet" and tweet_table is not None else target_table
                if src.shape != shape:
                    raise ShapeError(f"embedding block {name} expects {shape}, got {src.shape}")
                params[name] = np.array(src, dtype=np.float64)
            elif name.endswith(".bf"):
                params[name] = np.full(shape, FORGET_BIAS)
            elif ".b" in name or name == "head.b":
                params[name] = np.zeros(shape)
            else:
                params[name] = rng.uniform(-INIT_RANGE, INIT_RANGE, shape)
        self.params = params

    def set_params(self, params: Dict[str, np.ndarray]) -> None:
        expected = self.block_shapes()
        for name, shape in expected:
            if name not in params:
                raise ShapeError(f"missing parameter block {name}")
            if params[name].shape != shape:
                raise ShapeError(f"parameter block {name} has shape {params[name].shape}, expected {shape}")
        extra = set(params) - {n for n, _ in expected}
        if extra:
            raise ShapeError(f"unexpected parameter blocks {sorted(extra)}")
        self.params = {n: params[n] for n, _ in expected}

    def emb_name(self, side: str) -> str:
        return "emb" if self.sharing == "Sing" else f"emb.{side}"

    def lstm(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        return LstmParams.from_params(self.params, name).stacked()

    # -- forward -----------------------------------------------------------

    def _embed(self, side, idx, rate, rng):
        x = self.params[self.emb_name(side)][idx]
        if rate > 0.0:
            m = dropout_mask(x.shape, rate, rng)
            return x * m, m
        return x, None

    def forward(self, target_idx, tweet_idx, train: bool = False,
                rng: Optional[np.random.Generator] = None) -> Forward:
        target_idx = np.asarray(target_idx, dtype=np.int64)
        tweet_idx = np.asarray(tweet_idx, dtype=np.int64)
        if len(target_idx) == 0 or len(tweet_idx) == 0:
            raise ValueError("target and tweet must each contain at least one token")
        rate = self.dropout if (train and self.variant != BOWV) else 0.0
        if rate > 0.0 and rng is None:
            raise ValueError("train-mode dropout needs a random generator")
        xt, mt = self._embed("target", target_idx, rate, rng)
        xw, mw = self._embed("tweet", tweet_idx, rate, rng)
        cache = {"t_idx": target_idx, "w_idx": tweet_idx, "mt": mt, "mw": mw}
        P = self.params
        if self.variant == BOWV:
            rep = bowv_features(xt, xw)
            u = P["head.W"] @ rep
            if self.head_bias:
                u = u + P["head.b"]
            cache.update(rep=rep, nt=len(target_idx), nw=len(tweet_idx))
            return Forward(u, softmax(u), cache)

        k = self.k
        zero = np.zeros(k)
        runs = {}

        def run(name, xs, start=None, reverse=False):
            r = run_lstm(xs, start or LstmState(zero, zero), self.lstm(name), reverse)
            runs[name] = r
            return r.final

        def handoff(state):
            return LstmState(state.h if self.carry_h else zero, state.c)

        v = self.variant
        if v == TWEET_ONLY:
            reps = [run("tweet_fw", xw).h]
        elif v == CONCAT:
            reps = [run("target_fw", xt).h, run("tweet_fw", xw).h]
        elif v == TWEET_COND_TAR:
            reps = [run("tweet_fw", xw, handoff(run("target_fw", xt))).h]
        elif v == TAR_COND_TWEET:
            reps = [run("target_fw", xt, handoff(run("tweet_fw", xw))).h]
        else:
            fw = run("tweet_fw", xw, handoff(run("target_fw", xt)))
            bw = run("tweet_bw", xw, handoff(run("target_bw", xt, reverse=True)), reverse=True)
            reps = [fw.h, bw.h]

        rmasks = [None] * len(reps)
        if rate > 0.0:
            rmasks = [dropout_mask(r.shape, rate, rng) for r in reps]
            reps = [r * m for r, m in zip(reps, rmasks)]
        if v == CONCAT:
            u = P["head.W_ta"] @ reps[0] + P["head.W_tw"] @ reps[1]
        else:
            u = P["head.W"] @ (reps[0] if len(reps) == 1 else np.concatenate(reps))
        if self.head_bias:
            u = u + P["head.b"]
        a = np.tanh(u)
        cache.update(runs=runs, reps=reps, rmasks=rmasks, a=a)
        return Forward(a, softmax(a), cache)

    def predict_proba(self, target_idx, tweet_idx) -> np.ndarray:
        return self.forward(target_idx, tweet_idx).probs

    # -- backward ----------------------------------------------------------

    def backward(self, fwd: Forward, label: int, grads: Dict[str, np.ndarray], scale: float = 1.0) -> None:
        """Accumulate ``scale * d(-ln p[label])/d(params)`` into ``grads``.

        Blocks absent from ``grads`` (frozen ones) are skipped.
        """
        P, cache = self.params, fwd.cache
        dscore = fwd.probs.copy()
        dscore[label] -= 1.0
        dscore *= scale

        def acc(name, g):
            if name in grads:
                grads[name] += g

        if self.variant == BOWV:
            acc("head.W", np.outer(dscore, cache["rep"]))
            if self.head_bias:
                acc("head.b", dscore)
            if self.emb_name("tweet") in grads or self.emb_name("target") in grads:
                drep = P["head.W"].T @ dscore
                d = self.d
                dxw = np.broadcast_to(drep[:d] / cache["nw"], (cache["nw"], d))
                dxt = np.broadcast_to(drep[d:] / cache["nt"], (cache["nt"], d))
                self._emb_backward(cache, dxt, dxw, grads)
            return

        a = cache["a"]
        du = dscore * (1.0 - a * a)
        reps, rmasks = cache["reps"], cache["rmasks"]
        if self.head_bias:
            acc("head.b", du)
        if self.variant == CONCAT:
            acc("head.W_ta", np.outer(du, reps[0]))
            acc("head.W_tw", np.outer(du, reps[1]))
            dreps = [P["head.W_ta"].T @ du, P["head.W_tw"].T @ du]
        else:
            rep = reps[0] if len(reps) == 1 else np.concatenate(reps)
            acc("head.W", np.outer(du, rep))
            dflat = P["head.W"].T @ du
            dreps = [dflat] if len(reps) == 1 else [dflat[:self.k], dflat[self.k:]]
        dreps = [dr if m is None else dr * m for dr, m in zip(dreps, rmasks)]

        runs = cache["runs"]
        k = self.k
        zero = np.zeros(k)
        dx = {"target": np.zeros((len(cache["t_idx"]), self.d)),
              "tweet": np.zeros((len(cache["w_idx"]), self.d))}

        def back(name, dh, dc):
            dW, db, dxs, dh0, dc0 = run_lstm_backward(runs[name], dh, dc)
            for bn, g in split_stacked(name, dW, db, k).items():
                acc(bn, g)
            dx[name.split("_")[0]] += dxs
            return dh0, dc0

        def into_first(dh0, dc0):
            return (dh0 if self.carry_h else zero), dc0

        v = self.variant
        if v == TWEET_ONLY:
            back("tweet_fw", dreps[0], zero)
        elif v == CONCAT:
            back("target_fw", dreps[0], zero)
            back("tweet_fw", dreps[1], zero)
        elif v == TWEET_COND_TAR:
            back("target_fw", *into_first(*back("tweet_fw", dreps[0], zero)))
        elif v == TAR_COND_TWEET:
            back("tweet_fw", *into_first(*back("target_fw", dreps[0], zero)))
        else:
            back("target_fw", *into_first(*back("tweet_fw", dreps[0], zero)))
            back("target_bw", *into_first(*back("tweet_bw", dreps[1], zero)))
        self._emb_backward(cache, dx["target"], dx["tweet"], grads)

    def _emb_backward(self, cache, dxt, dxw, grads):
        for side, idx, dxs, m in (("target", cache["t_idx"], dxt, cache["mt"]),
                                  ("tweet", cache["w_idx"], dxw, cache["mw"])):
            name = self.emb_name(side)
            if name in grads:
                np.add.at(grads[name], idx, dxs if m is None else dxs * m)

    # -- batch objective ---------------------------------------------------

    def loss_and_grads(self, batch: Sequence[Tuple[np.ndarray, np.ndarray, int]],
                       train: bool = False, rng: Optional[np.random.Generator] = None,
                       blocks: Optional[Sequence[str]] = None):
        """Mean cross-entropy over ``batch`` (plus the L2 term for BoWV).

        Returns ``(loss, grads, n_clamped)``; gradients cover ``blocks``
        (default: the trainable blocks).
        """
        names = self.trainable if blocks is None else list(blocks)
        grads = {n: np.zeros_like(self.params[n]) for n in names}
        scale = 1.0 / len(batch)
        total, clamped = 0.0, 0
        for t_idx, w_idx, y in batch:
            fwd = self.forward(t_idx, w_idx, train=train, rng=rng)
            total += cross_entropy(fwd.probs, y)
            clamped += is_clamped(fwd.probs, y)
            self.backward(fwd, y, grads, scale)
        loss = total * scale
        if self.variant == BOWV and self.l2 > 0.0:
            W = self.params["head.W"]
            loss += self.l2 * float(np.sum(W * W))
            if "head.W" in grads:
                grads["head.W"] += 2.0 * self.l2 * W
        return loss, grads, clamped
