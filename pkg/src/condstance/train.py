"""Supervised training, evaluation and model checkpoints."""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .config import ModelConfig
from .corpus import Instance
from .embed import EmbeddingTable, init_table
from .encoders import StanceModel
from .metrics import LABELS, EvalReport, argmax_first, label_index, per_class_prf, postprocess
from .numcore import AdamState, adam_step, global_norm
from .textprep import UNK_INDEX, Vocab, build_vocab, encode, tokenize

CHECKPOINT_MAGIC = b"CONDSTANCE-CHECKPOINT 1\n"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class CheckpointError(ValueError):
    pass


def encode_text(text: str, vocab: Vocab) -> np.ndarray:
    """Token indices of ``text``; a text with no surviving token becomes ``[UNK]``."""
    idx = encode(tokenize(text), vocab)
    return idx if len(idx) else np.array([UNK_INDEX], dtype=np.int64)


@dataclass
class TrainedModel:
    cfg: ModelConfig
    vocab: Vocab
    model: StanceModel

    def encode(self, inst: Instance) -> Tuple[np.ndarray, np.ndarray]:
        return encode_text(inst.target, self.vocab), encode_text(inst.tweet, self.vocab)

    def predict_proba(self, instances: Sequence[Instance]) -> np.ndarray:
        out = np.empty((len(instances), len(LABELS)))
        for n, inst in enumerate(instances):
            out[n] = self.model.predict_proba(*self.encode(inst))
        return out


def model_vocab(train: Sequence[Instance], cfg: ModelConfig,
                pretrained: Optional[EmbeddingTable] = None) -> Vocab:
    """Training tokens (count >= ``vocab_min_count``) plus the pretrained vocabulary."""
    seqs = [tokenize(inst.target) for inst in train] + [tokenize(inst.tweet) for inst in train]
    vocab = build_vocab(seqs, cfg.vocab_min_count)
    if pretrained is not None and cfg.emb_mode != "Random":
        vocab = vocab.extended(pretrained.vocab.itos[1:])
    return vocab


def build_model(cfg: ModelConfig, vocab: Vocab,
                pretrained: Optional[EmbeddingTable] = None) -> TrainedModel:
    table = init_table(vocab, cfg.emb_mode, cfg.input_dim, pretrained, seed=cfg.seed)
    tweet_table = None
    if cfg.sharing == "Sep":
        tweet_table = init_table(vocab, cfg.emb_mode, cfg.input_dim, pretrained, seed=cfg.seed + 7919).vectors
    model = StanceModel(cfg.variant, cfg.input_dim, cfg.hidden_k, len(vocab), sharing=cfg.sharing,
                        head_bias=cfg.head_bias, carry_h=cfg.carry_h, emb_trainable=table.trainable,
                        dropout=cfg.dropout, l2=cfg.l2)
    model.init_params(np.random.default_rng([cfg.seed, 1]), table.vectors, tweet_table)
    return TrainedModel(cfg, vocab, model)


# --------------------------------------------------------------------------
# history

@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    dev_macro_f1: Optional[float]
    clamped: int = 0
    wall_time: float = 0.0

    def as_record(self, timing: bool = False) -> dict:
        d = {"epoch": self.epoch, "train_loss": self.train_loss,
             "dev_macro_f1": self.dev_macro_f1, "clamped": self.clamped}
        if timing:
            d["wall_time"] = self.wall_time
        return d


@dataclass
class TrainHistory:
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1

    def records(self, timing: bool = False) -> List[dict]:
        return [e.as_record(timing) for e in self.epochs]

    def to_jsonl(self, timing: bool = False) -> str:
        lines = [json.dumps(r, sort_keys=True) for r in self.records(timing)]
        lines.append(json.dumps({"best_epoch": self.best_epoch}))
        return "\n".join(lines) + "\n"

    def to_table(self, timing: bool = False) -> str:
        head = f"{'epoch':>5}  {'train_loss':>12}  {'dev_macro_f1':>12}"
        if timing:
            head += f"  {'seconds':>8}"
        lines = [head]
        for e in self.epochs:
            dev = "-" if e.dev_macro_f1 is None else f"{e.dev_macro_f1:.4f}"
            mark = " *" if e.epoch == self.best_epoch else ""
            line = f"{e.epoch:>5}  {e.train_loss:>12.6f}  {dev:>12}"
            if timing:
                line += f"  {e.wall_time:>8.2f}"
            lines.append(line + mark)
        return "\n".join(lines) + "\n"

    def __eq__(self, other):
        # wall-clock time is not part of a run's identity
        return (isinstance(other, TrainHistory) and self.best_epoch == other.best_epoch
                and self.records() == other.records())


# --------------------------------------------------------------------------
# training

def _encode_labeled(instances: Sequence[Instance], tm: TrainedModel):
    out = []
    for inst in instances:
        if inst.stance is None:
            raise TrainingError(f"instance {inst.id} has no stance label")
        t, w = tm.encode(inst)
        out.append((t, w, label_index(inst.stance)))
    return out


def train_supervised(train: Sequence[Instance], dev: Sequence[Instance], cfg: ModelConfig,
                     pretrained: Optional[EmbeddingTable] = None,
                     log: Optional[Callable[[str], None]] = None) -> Tuple[TrainedModel, TrainHistory]:
    """Mini-batch Adam on mean cross-entropy with dev-based model selection.

    The returned model holds the parameters of the epoch with the best dev
    macro-F1 (earliest on ties), or of the last epoch when ``dev`` is empty.
    """
    if not train:
        raise TrainingError("training set is empty")
    vocab = model_vocab(train, cfg, pretrained)
    tm = build_model(cfg, vocab, pretrained)
    model = tm.model
    data = _encode_labeled(train, tm)
    rng = np.random.default_rng([cfg.seed, 2])
    adam = AdamState(alpha=cfg.lr)
    names = model.trainable
    history = TrainHistory()
    best_f1 = -1.0
    best_params = {k: v.copy() for k, v in model.params.items()}

    for epoch in range(cfg.max_epochs):
        start = time.perf_counter()
        order = rng.permutation(len(data))
        total, clamped = 0.0, 0
        for b, lo in enumerate(range(0, len(order), cfg.batch_size)):
            batch = [data[i] for i in order[lo:lo + cfg.batch_size]]
            loss, grads, n_clamped = model.loss_and_grads(batch, train=True, rng=rng)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch}, batch {b}")
            total += loss * len(batch)
            clamped += n_clamped
            if cfg.clip_norm > 0.0:
                norm = global_norm(grads)
                if norm > cfg.clip_norm:
                    for g in grads.values():
                        g *= cfg.clip_norm / norm
            adam_step(model.params, grads, adam, names)
        dev_f1 = evaluate_on(dev, tm)[0].macro_f1 if dev else None
        rec = EpochRecord(epoch, total / len(data), dev_f1, clamped, time.perf_counter() - start)
        history.epochs.append(rec)
        if dev_f1 is None or dev_f1 > best_f1:
            best_f1 = -1.0 if dev_f1 is None else dev_f1
            history.best_epoch = epoch
            best_params = {k: v.copy() for k, v in model.params.items()}
        if log is not None:
            shown = "-" if dev_f1 is None else f"{dev_f1:.4f}"
            log(f"epoch {epoch:3d}  loss {rec.train_loss:.6f}  dev macro-F1 {shown}  ({rec.wall_time:.1f}s)")
    model.params = best_params
    return tm, history


def predict_labels(instances: Sequence[Instance], tm: TrainedModel,
                   use_postprocess: Optional[bool] = None) -> Tuple[List[str], np.ndarray]:
    probs = tm.predict_proba(instances)
    if use_postprocess is None:
        use_postprocess = tm.cfg.postprocess
    if use_postprocess:
        idx = postprocess(probs, [i.tweet for i in instances], [i.target for i in instances],
                          tm.cfg.aliases)
    else:
        idx = [argmax_first(p) for p in probs]
    return [LABELS[i] for i in idx], probs


def evaluate_on(dataset: Sequence[Instance], tm: TrainedModel,
                use_postprocess: Optional[bool] = None) -> Tuple[EvalReport, List[str]]:
    if not dataset:
        raise ValueError("cannot evaluate on an empty dataset")
    preds, _ = predict_labels(dataset, tm, use_postprocess)
    return per_class_prf([i.stance for i in dataset], preds), preds


# --------------------------------------------------------------------------
# checkpoints

def _manifest(tm: TrainedModel) -> dict:
    m = tm.model
    return {
        "format_version": CHECKPOINT_VERSION,
        "variant": m.variant,
        "input_dim": m.d,
        "hidden_k": m.k,
        "sharing": m.sharing,
        "class_order": list(LABELS),
        "config": tm.cfg.to_dict(),
        "blocks": [[name, list(shape)] for name, shape in m.block_shapes()],
        "vocab": tm.vocab.itos,
    }


def checkpoint_bytes(tm: TrainedModel) -> bytes:
    manifest = json.dumps(_manifest(tm), sort_keys=True, ensure_ascii=False).encode("utf-8")
    parts = [CHECKPOINT_MAGIC, f"{len(manifest)}\n".encode("ascii"), manifest]
    for name, _ in tm.model.block_shapes():
        parts.append(np.ascontiguousarray(tm.model.params[name], dtype="<f8").tobytes())
    return b"".join(parts)


def save_model(tm: TrainedModel, path) -> None:
    Path(path).write_bytes(checkpoint_bytes(tm))


def load_model(path) -> TrainedModel:
    """Read a checkpoint, validating every block against the stored config."""
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint (bad magic line)")
    pos = len(CHECKPOINT_MAGIC)
    nl = data.find(b"\n", pos)
    if nl < 0:
        raise CheckpointError(f"{path}: truncated header")
    try:
        mlen = int(data[pos:nl])
        manifest = json.loads(data[nl + 1:nl + 1 + mlen].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"{path}: unreadable manifest ({exc})") from None
    if manifest.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {manifest.get('format_version')}")
    if manifest.get("class_order") != list(LABELS):
        raise CheckpointError(f"{path}: class order {manifest.get('class_order')} differs from {list(LABELS)}")
    cfg = ModelConfig.from_dict(manifest["config"])
    vocab = Vocab(manifest["vocab"])
    model = StanceModel(cfg.variant, cfg.input_dim, cfg.hidden_k, len(vocab), sharing=cfg.sharing,
                        head_bias=cfg.head_bias, carry_h=cfg.carry_h,
                        emb_trainable=cfg.emb_mode != "PreFixed", dropout=cfg.dropout, l2=cfg.l2)
    expected = model.block_shapes()
    stored = [(n, tuple(s)) for n, s in manifest["blocks"]]
    for (en, es), (sn, ss) in zip(expected, stored):
        if en != sn or es != ss:
            raise CheckpointError(f"{path}: block {sn} {ss} does not match expected {en} {es}")
    if len(stored) != len(expected):
        raise CheckpointError(f"{path}: {len(stored)} blocks stored, {len(expected)} expected")
    offset = nl + 1 + mlen
    params: Dict[str, np.ndarray] = {}
    for name, shape in expected:
        n = int(np.prod(shape)) * 8
        if offset + n > len(data):
            raise CheckpointError(f"{path}: truncated inside block {name}")
        params[name] = np.frombuffer(data, dtype="<f8", count=n // 8, offset=offset).astype(np.float64).reshape(shape)
        offset += n
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes after the last block")
    model.set_params(params)
    return TrainedModel(cfg, vocab, model)


def stderr_log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)
