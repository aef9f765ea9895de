"""Target-conditioned LSTM encoders for stance detection on tweets."""

from .config import ModelConfig
from .corpus import Instance, parse_semeval_tsv
from .embed import EmbeddingTable, SkipgramConfig, train_skipgram
from .encoders import VARIANTS, StanceModel
from .metrics import LABELS, EvalReport, per_class_prf, postprocess, report_table
from .train import TrainedModel, evaluate_on, load_model, save_model, train_supervised

__version__ = "0.1.0"

__all__ = [
    "ModelConfig", "Instance", "parse_semeval_tsv", "EmbeddingTable", "SkipgramConfig",
    "train_skipgram", "VARIANTS", "StanceModel", "LABELS", "EvalReport", "per_class_prf",
    "postprocess", "report_table", "TrainedModel", "evaluate_on", "load_model", "save_model",
    "train_supervised",
]
