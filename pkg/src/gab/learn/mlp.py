"""One-hidden-layer tanh networks, multiclass (softmax) or binary (logistic).

Weights start small-uniform in the first layer and zero in the second, with
output biases at the log class priors: an untrained net therefore scores
every input at exactly the training prior. Full-batch training (batch=None)
adapts the step size in both directions: halve until a step stops raising
the loss, double after an epoch accepted at the first try. The epoch-end
loss sequence never increases. Minibatch training is plain SGD.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..core import DataError
from . import kernels
from .common import ConstantModel, MlpConfig, Model, register_model, validate_config


def _logsumexp(z: np.ndarray) -> np.ndarray:
    m = z.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(z - m).sum(axis=1, keepdims=True)))[:, 0]


def _softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(params: dict, X, y_enc, l2: float, sample_weight=None, mode="multiclass"):
    """Loss and exact gradients at `params`, for training and for gradient checks.

    multiclass: y_enc is one-hot (n, C). binary: y_enc is +/-1 (n,).
    Returns (loss, grads) with grads keyed like params (W1, b1, W2, b2).
    """
    w = np.ones(X.shape[0]) if sample_weight is None else np.asarray(sample_weight, float)
    if mode == "binary":
        prob = kernels.PackedProblem(
            X[None, :, :], np.asarray(y_enc, float)[None, :], w[None, :]
        )
        L, grads = kernels.mlp_binary_loss(
            prob,
            params["W1"][None],
            params["b1"][None],
            params["W2"][None],
            np.atleast_1d(params["b2"]).astype(float),
            l2,
            need_grads=True,
        )
        gW1, gb1, gW2, gb2 = grads
        return float(L[0]), {
            "W1": gW1[0],
            "b1": gb1[0],
            "W2": gW2[0],
            "b2": gb2[0],
        }
    W1, b1, W2, b2 = params["W1"], params["b1"], params["W2"], params["b2"]
    wsum = w.sum()
    Z1 = X @ W1 + b1
    A = np.tanh(Z1)
    Z2 = A @ W2 + b2
    ce = _logsumexp(Z2) - (Z2 * y_enc).sum(axis=1)
    loss = float((w * ce).sum() / wsum + 0.5 * l2 * ((W1 * W1).sum() + (W2 * W2).sum()))
    dZ2 = (w / wsum)[:, None] * (_softmax(Z2) - y_enc)
    gW2 = A.T @ dZ2 + l2 * W2
    gb2 = dZ2.sum(axis=0)
    dA = dZ2 @ W2.T
    dZ1 = dA * (1.0 - A * A)
    gW1 = X.T @ dZ1 + l2 * W1
    gb1 = dZ1.sum(axis=0)
    return loss, {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2}


@register_model
class MlpModel(Model):
    kind = "mlp"

    def __init__(self, classes, mode, W1, b1, W2, b2):
        self.classes = tuple(classes)
        self.mode = mode
        self.W1 = np.asarray(W1, float)
        self.b1 = np.asarray(b1, float)
        self.W2 = np.asarray(W2, float)
        self.b2 = b2 if np.ndim(b2) else float(b2)

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        A = np.tanh(X @ self.W1 + self.b1)
        if self.mode == "binary":
            p = kernels.sigmoid(A @ self.W2 + self.b2)
            return np.stack([1.0 - p, p], axis=1)
        return _softmax(A @ self.W2 + self.b2)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "mode": self.mode,
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": np.asarray(self.W2).tolist(),
            "b2": self.b2 if isinstance(self.b2, float) else np.asarray(self.b2).tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        b2 = doc["b2"]
        return cls(
            doc["classes"],
            doc["mode"],
            np.array(doc["W1"], float),
            np.array(doc["b1"], float),
            np.array(doc["W2"], float),
            float(b2) if isinstance(b2, (int, float)) else np.array(b2, float),
        )


def _encode_classes(y) -> tuple[tuple[str, ...], np.ndarray]:
    classes = tuple(sorted(set(y)))
    lut = {c: i for i, c in enumerate(classes)}
    return classes, np.fromiter((lut[v] for v in y), dtype=np.int64, count=len(y))


def train_mlp(
    X: np.ndarray,
    y: list[str],
    cfg: MlpConfig | None = None,
    seed: int = 0,
    mode: str = "multiclass",
    sample_weight=None,
    w1_init: np.ndarray | None = None,
):
    """Fit a network. Returns a ConstantModel (with a warning) on one-class data.

    `w1_init` overrides the first-layer init with a pre-drawn uniform(-1, 1)
    block of shape (n_features, hidden); callers that train many related
    models pass slices of one shared draw so results do not depend on how
    the models are batched.
    """
    cfg = cfg or MlpConfig()
    from .common import TrainConfig

    validate_config(TrainConfig(mlp=cfg))
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    classes, yi = _encode_classes(y)
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    if mode not in ("multiclass", "binary"):
        raise DataError(f"unknown mlp mode {mode!r}")
    if mode == "binary" and len(classes) != 2:
        raise DataError(f"binary mode needs exactly 2 classes, got {len(classes)}")
    n, d = X.shape
    H = cfg.hidden
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, float)
    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, size=(d, H)) if w1_init is None else np.asarray(w1_init)

    if mode == "binary":
        ypm = np.where(yi == 1, 1.0, -1.0)
        if cfg.batch is None:
            prob = kernels.PackedProblem(X[None], ypm[None], w[None])
            (W1, b1, W2, b2), _ = kernels.mlp_binary_fullbatch(
                prob, H, cfg.learning_rate, cfg.epochs, cfg.l2,
                raw[None], np.array([d]),
            )
            return MlpModel(classes, "binary", W1[0], b1[0], W2[0], float(b2[0]))
        return _train_binary_minibatch(X, ypm, w, classes, cfg, raw, rng)

    T = np.zeros((n, len(classes)))
    T[np.arange(n), yi] = 1.0
    params = _init_multiclass(d, H, len(classes), raw, T, w)
    if cfg.batch is None:
        params = _fullbatch_multiclass(params, X, T, cfg, w)
    else:
        params = _minibatch_multiclass(params, X, T, cfg, w, rng)
    return MlpModel(classes, "multiclass", params["W1"], params["b1"], params["W2"], params["b2"])


def _init_multiclass(d, H, C, raw, T, w):
    scale = np.sqrt(6.0 / (d + H))
    prior = np.clip((w[:, None] * T).sum(axis=0) / w.sum(), 1e-12, None)
    return {
        "W1": raw * scale,
        "b1": np.zeros(H),
        "W2": np.zeros((H, C)),
        "b2": np.log(prior),
    }


def _fullbatch_multiclass(params, X, T, cfg, w):
    step = cfg.learning_rate
    cap = cfg.learning_rate * kernels.STEP_GROWTH_CAP
    loss, grads = loss_and_grad(params, X, T, cfg.l2, w)
    for t in range(cfg.epochs):
        halved = False
        for _ in range(kernels.BACKTRACK_LIMIT + 1):
            trial = {k: params[k] - step * grads[k] for k in params}
            new_loss, _ = loss_and_grad(trial, X, T, cfg.l2, w)
            if new_loss <= loss + 1e-12:
                break
            step *= 0.5
            halved = True
        else:
            trial, new_loss = params, loss
        params, loss = trial, new_loss
        if not halved:
            step = min(step * 2.0, cap)
        if t + 1 < cfg.epochs:
            _, grads = loss_and_grad(params, X, T, cfg.l2, w)
    return params


def _minibatch_multiclass(params, X, T, cfg, w, rng):
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for s in range(0, n, cfg.batch):
            idx = order[s : s + cfg.batch]
            _, grads = loss_and_grad(params, X[idx], T[idx], cfg.l2, w[idx])
            for k in params:
                params[k] = params[k] - cfg.learning_rate * grads[k]
    return params


def _train_binary_minibatch(X, ypm, w, classes, cfg, raw, rng):
    d = X.shape[1]
    prob_all = kernels.PackedProblem(X[None], ypm[None], w[None])
    W1, b1, W2, b2 = kernels.mlp_binary_init(prob_all, cfg.hidden, raw[None], np.array([d]))
    params = {"W1": W1[0], "b1": b1[0], "W2": W2[0], "b2": float(b2[0])}
    n = X.shape[0]
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for s in range(0, n, cfg.batch):
            idx = order[s : s + cfg.batch]
            _, grads = loss_and_grad(
                params, X[idx], ypm[idx], cfg.l2, w[idx], mode="binary"
            )
            for k in params:
                params[k] = params[k] - cfg.learning_rate * grads[k]
    return MlpModel(classes, "binary", params["W1"], params["b1"], params["W2"], float(params["b2"]))
