"""Linear binary SVM trained by subgradient descent on the primal hinge loss.

Default mode visits samples one at a time in a freshly shuffled order each
epoch; "full-batch" mode takes one deterministic subgradient step per epoch.
Either way the model returned is the epoch-end iterate with the lowest
objective seen (the zero init counts), so a diverging step size cannot make
the result worse than doing nothing.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..core import DataError
from . import kernels
from .common import ConstantModel, Model, SvmConfig, register_model, validate_config


@register_model
class SvmModel(Model):
    kind = "svm"

    def __init__(self, classes, w, b):
        self.classes = tuple(classes)
        self.w = np.asarray(w, float)
        self.b = float(b)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return X @ self.w + self.b

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        p = kernels.sigmoid(self.decision(X))
        return np.stack([1.0 - p, p], axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "w": self.w.tolist(),
            "b": self.b,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SvmModel":
        return cls(doc["classes"], np.array(doc["w"], float), doc["b"])


def svm_objective(X, ypm, w, W, b, c: float) -> float:
    prob = kernels.PackedProblem(X[None], ypm[None], w[None])
    J, _ = kernels.svm_objective(prob, np.asarray(W, float)[None], np.array([b], float), c)
    return float(J[0])


def train_svm(
    X: np.ndarray,
    y: list[str],
    cfg: SvmConfig | None = None,
    seed: int = 0,
    sample_weight=None,
):
    cfg = cfg or SvmConfig()
    from .common import TrainConfig

    validate_config(TrainConfig(svm=cfg))
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    classes = tuple(sorted(set(y)))
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    if len(classes) != 2:
        raise DataError(f"linear SVM is binary, got {len(classes)} classes")
    ypm = np.fromiter((1.0 if v == classes[1] else -1.0 for v in y), float, count=len(y))
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)

    if cfg.mode == "full-batch":
        prob = kernels.PackedProblem(X[None], ypm[None], w[None])
        W, b, _ = kernels.svm_fullbatch(prob, cfg.c, cfg.learning_rate, cfg.epochs)
        return SvmModel(classes, W[0], float(b[0]))

    n, d = X.shape
    wsum = w.sum()
    lam = 1.0 / (cfg.c * wsum)
    lr = cfg.learning_rate
    rng = np.random.default_rng(seed)
    wv = np.zeros(d)
    b = 0.0
    best = (svm_objective(X, ypm, w, wv, b, cfg.c), wv.copy(), b)
    for _ in range(cfg.epochs):
        for i in rng.permutation(n):
            margin = ypm[i] * (X[i] @ wv + b)
            # sample i stands in for the whole data term: scale by n * w_i / wsum
            wv *= 1.0 - lr * lam
            if margin < 1.0:
                scale = lr * ypm[i] * (n * w[i] / wsum)
                wv += scale * X[i]
                b += scale
        J = svm_objective(X, ypm, w, wv, b, cfg.c)
        if J < best[0]:
            best = (J, wv.copy(), b)
    return SvmModel(classes, best[1], best[2])
