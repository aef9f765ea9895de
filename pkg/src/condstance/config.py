"""Experiment configuration: dataclasses plus flat ``key = value`` INI files."""

from __future__ import annotations

import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional

from .embed import MODES, SING, SEP, SkipgramConfig
from .encoders import VARIANTS


@dataclass
class ModelConfig:
    variant: str = "BiCond"
    input_dim: int = 100
    hidden_k: int = 60
    max_epochs: int = 50
    lr: float = 1e-3
    dropout: float = 0.1
    batch_size: int = 32
    seed: int = 0
    emb_mode: str = "Random"
    sharing: str = SING
    head_bias: bool = True
    carry_h: bool = False
    l2: float = 1e-4
    clip_norm: float = 0.0
    vocab_min_count: int = 1
    postprocess: bool = True
    aliases: Dict[str, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.emb_mode not in MODES:
            raise ValueError(f"unknown embedding mode {self.emb_mode!r}")
        if self.sharing not in (SING, SEP):
            raise ValueError(f"sharing must be {SING} or {SEP}")
        if self.input_dim < 1 or self.hidden_k < 1 or self.batch_size < 1 or self.max_epochs < 0:
            raise ValueError("dimensions, batch size and epochs must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0, 1), got {self.dropout}")
        if self.lr < 0:
            raise ValueError("learning rate must be >= 0")
        self.aliases = {k.lower(): list(v) for k, v in self.aliases.items()}

    def aliases_for(self, target: str) -> List[str]:
        return self.aliases.get(target.lower(), [])

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ModelConfig":
        return cls(**coerce_fields(cls, d))


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def coerce_fields(cls, d: Mapping[str, Any]) -> Dict[str, Any]:
    """Convert string values from an INI section to the dataclass field types."""
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    out = {}
    for key, value in d.items():
        if key not in types:
            raise ValueError(f"unknown {cls.__name__} key {key!r}")
        t = str(types[key])
        if not isinstance(value, str):
            out[key] = value
        elif t == "int":
            out[key] = int(value)
        elif t == "float":
            out[key] = float(value)
        elif t == "bool":
            out[key] = _to_bool(value)
        elif t.startswith("Dict"):
            raise ValueError(f"{key} cannot be given as a plain value")
        else:
            out[key] = value.strip()
    return out


def skipgram_from_dict(d: Mapping[str, Any]) -> SkipgramConfig:
    return SkipgramConfig(**coerce_fields(SkipgramConfig, d))


def split_list(value: str) -> List[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def read_ini(path) -> Dict[str, Dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    return {s: dict(parser[s]) for s in parser.sections()}


def write_ini(sections: Mapping[str, Mapping[str, Any]]) -> str:
    """Deterministic INI text; keys keep their insertion order."""
    buf = io.StringIO()
    for name, values in sections.items():
        buf.write(f"[{name}]\n")
        for k, v in values.items():
            if isinstance(v, (list, tuple)):
                v = ", ".join(str(x) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            buf.write(f"{k} = {v}\n")
        buf.write("\n")
    return buf.getvalue()


def model_config_from_sections(sections: Mapping[str, Mapping[str, str]],
                               seed: Optional[int] = None) -> ModelConfig:
    values: Dict[str, Any] = dict(sections.get("model", {}))
    if seed is not None:
        values["seed"] = seed
    aliases = {t: split_list(v) for t, v in sections.get("aliases", {}).items()}
    cfg = ModelConfig.from_dict(values)
    cfg.aliases = {k.lower(): v for k, v in aliases.items()}
    return cfg


def model_config_sections(cfg: ModelConfig) -> Dict[str, Dict[str, Any]]:
    d = cfg.to_dict()
    aliases = d.pop("aliases")
    return {"model": d, "aliases": aliases}
