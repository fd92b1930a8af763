"""Shared training configuration and model serialization.

Every model serializes to a dict with a "kind" tag; files are gzip'd
canonical JSON (sorted keys, zero mtime) so identical models give identical
bytes.
"""

from __future__ import annotations

import gzip
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..core import DataError, InvalidConfig

MODEL_FORMAT = "gab-model/1"

CLASSIFIER_KINDS = ("forest", "mlp", "svm-ovo", "boost-ovo", "mlp-binary-ovo")

SVM_MODES = ("per-sample", "full-batch")


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 32
    min_leaf: int = 1
    feature_subsample: int | None = None  # None: round(sqrt(n_features))


@dataclass
class MlpConfig:
    hidden: int = 100
    epochs: int = 300
    learning_rate: float = 0.05
    l2: float = 1e-4
    batch: int | None = None  # None: full-batch with the monotone safeguard


@dataclass
class SvmConfig:
    c: float = 1.0
    epochs: int = 200
    learning_rate: float = 0.1
    mode: str = "per-sample"


@dataclass
class BoostConfig:
    rounds: int = 200


@dataclass
class TrainConfig:
    forest: ForestConfig = field(default_factory=ForestConfig)
    mlp: MlpConfig = field(default_factory=MlpConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    boost: BoostConfig = field(default_factory=BoostConfig)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainConfig":
        if not isinstance(doc, dict):
            raise InvalidConfig("config must be a JSON object")
        unknown = set(doc) - {"forest", "mlp", "svm", "boost"}
        if unknown:
            raise InvalidConfig(f"unknown config sections {sorted(unknown)}")
        cfg = cls()
        try:
            for section, target in (
                ("forest", cfg.forest),
                ("mlp", cfg.mlp),
                ("svm", cfg.svm),
                ("boost", cfg.boost),
            ):
                for k, v in (doc.get(section) or {}).items():
                    if not hasattr(target, k):
                        raise InvalidConfig(f"unknown {section} option {k!r}")
                    setattr(target, k, v)
        except InvalidConfig:
            raise
        except (TypeError, AttributeError) as e:
            raise InvalidConfig(f"malformed config: {e}") from None
        validate_config(cfg)
        return cfg


def validate_config(cfg: TrainConfig):
    f, m, s, b = cfg.forest, cfg.mlp, cfg.svm, cfg.boost
    if f.n_trees < 1:
        raise InvalidConfig("forest.n_trees must be >= 1")
    if f.max_depth < 1:
        raise InvalidConfig("forest.max_depth must be >= 1")
    if f.min_leaf < 1:
        raise InvalidConfig("forest.min_leaf must be >= 1")
    if f.feature_subsample is not None and f.feature_subsample < 1:
        raise InvalidConfig("forest.feature_subsample must be >= 1 or null")
    if m.hidden < 1:
        raise InvalidConfig("mlp.hidden must be >= 1")
    if m.epochs < 0:
        raise InvalidConfig("mlp.epochs must be >= 0")
    if m.learning_rate <= 0:
        raise InvalidConfig("mlp.learning_rate must be > 0")
    if m.l2 < 0:
        raise InvalidConfig("mlp.l2 must be >= 0")
    if m.batch is not None and m.batch < 1:
        raise InvalidConfig("mlp.batch must be >= 1 or null")
    if s.c <= 0:
        raise InvalidConfig("svm.c must be > 0")
    if s.epochs < 0:
        raise InvalidConfig("svm.epochs must be >= 0")
    if s.learning_rate <= 0:
        raise InvalidConfig("svm.learning_rate must be > 0")
    if s.mode not in SVM_MODES:
        raise InvalidConfig(f"svm.mode must be one of {SVM_MODES}")
    if b.rounds < 1:
        raise InvalidConfig("boost.rounds must be >= 1")


class Model:
    """Common interface: classes, label prediction, per-class scores."""

    kind = "?"
    classes: tuple[str, ...] = ()

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> list[str]:
        scores = self.predict_scores(X)
        idx = np.argmax(scores, axis=1)
        return [self.classes[i] for i in idx]

    def to_dict(self) -> dict:
        raise NotImplementedError


class ConstantModel(Model):
    """Degenerate case: training data carried a single class."""

    kind = "constant"

    def __init__(self, label: str):
        self.classes = (label,)

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return np.ones((X.shape[0], 1))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "label": self.classes[0]}

    @classmethod
    def from_dict(cls, doc: dict) -> "ConstantModel":
        return cls(doc["label"])


_REGISTRY: dict[str, type] = {"constant": ConstantModel}


def register_model(cls: type):
    _REGISTRY[cls.kind] = cls
    return cls


def model_from_dict(doc: dict) -> Model:
    kind = doc.get("kind")
    if kind not in _REGISTRY:
        raise DataError(f"unknown model kind {kind!r}")
    return _REGISTRY[kind].from_dict(doc)


def save_model(model: Model, path):
    doc = {"format": MODEL_FORMAT, "model": model.to_dict()}
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    buf = io.BytesIO()
    # fixed mtime: identical models must serialize to identical bytes
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        gz.write(payload.encode("utf-8"))
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> Model:
    try:
        with gzip.open(path, "rb") as gz:
            doc = json.loads(gz.read().decode("utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as e:
        raise DataError(f"{path}: not a model file ({e})") from None
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: format tag {doc.get('format')!r}")
    return model_from_dict(doc["model"])
