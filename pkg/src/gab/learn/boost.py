"""AdaBoost over depth-1 decision stumps.

Stumps test one feature against one threshold. On small non-negative
integer features (one-hot bits, occurrence counts, ordinal codes) every
useful threshold is k - 0.5 for an integer k, so the feature is expanded
into indicator columns x >= k and the batched 0/1 kernel trains on those;
the fitted stumps are mapped back to the original column and threshold. On
other numeric features candidate thresholds are the midpoints between
consecutive distinct values. Stump weights are alpha = ln((1-err)/err)/2,
capped when a stump is perfect, in which case boosting stops early (further
rounds could only echo it).
"""

from __future__ import annotations

import warnings

import numpy as np

from ..core import DataError
from . import kernels
from .common import BoostConfig, ConstantModel, Model, register_model, validate_config

STUMP_VALUE_CAP = 255.0  # per-feature max value the expansion will cover
STUMP_WIDTH_CAP = 4096   # total indicator columns the expansion may produce


def stump_cuts(X: np.ndarray):
    """Indicator-expansion plan for integer features, or None.

    Returns (src, thr): expanded column e tests X[:, src[e]] > thr[e], with
    thr running k - 0.5 for k = 1..max of each feature in column order. The
    qualifying test (non-negative integers within the caps) is monotone
    under row and column subsetting, so any submatrix of a qualifying
    matrix qualifies with a subset of the same cuts.
    """
    if X.size == 0:
        return None
    mx = X.max(axis=0)
    if X.min() < 0.0 or float(mx.max(initial=0.0)) > STUMP_VALUE_CAP:
        return None
    if not np.all(X == np.rint(X)):
        return None
    reps = mx.astype(np.int64)
    if int(reps.sum()) > STUMP_WIDTH_CAP:
        return None
    src = np.repeat(np.arange(X.shape[1], dtype=np.int64), reps)
    starts = np.cumsum(reps) - reps
    k = np.arange(src.size, dtype=np.int64) - np.repeat(starts, reps) + 1
    return src, k.astype(float) - 0.5


def expand_stumps(X: np.ndarray, src: np.ndarray, thr: np.ndarray) -> np.ndarray:
    return (X[:, src] > thr[None, :]).astype(float)


@register_model
class BoostModel(Model):
    kind = "boost"

    def __init__(self, classes, features, thresholds, polarities, alphas):
        self.classes = tuple(classes)
        self.features = np.asarray(features, np.int64)
        self.thresholds = np.asarray(thresholds, float)
        self.polarities = np.asarray(polarities, float)
        self.alphas = np.asarray(alphas, float)

    def margin(self, X: np.ndarray) -> np.ndarray:
        m = np.zeros(X.shape[0])
        for f, th, pol, a in zip(
            self.features, self.thresholds, self.polarities, self.alphas
        ):
            if a == 0.0:
                continue
            h = np.where(X[:, f] > th, 1.0, -1.0) * pol
            m += a * h
        return m

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        total = self.alphas.sum()
        if total <= 0:
            p = np.full(X.shape[0], 0.5)
        else:
            # normalized margin in [-1, 1], shifted to a [0, 1] score
            p = 0.5 + self.margin(X) / (2.0 * total)
        return np.stack([1.0 - p, p], axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "features": self.features.tolist(),
            "thresholds": self.thresholds.tolist(),
            "polarities": self.polarities.tolist(),
            "alphas": self.alphas.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BoostModel":
        return cls(
            doc["classes"],
            doc["features"],
            doc["thresholds"],
            doc["polarities"],
            doc["alphas"],
        )


def train_boost(
    X: np.ndarray,
    y: list[str],
    cfg: BoostConfig | None = None,
    seed: int = 0,
    sample_weight=None,
):
    """Deterministic: the seed parameter exists for interface symmetry only."""
    cfg = cfg or BoostConfig()
    from .common import TrainConfig

    validate_config(TrainConfig(boost=cfg))
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    classes = tuple(sorted(set(y)))
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    if len(classes) != 2:
        raise DataError(f"boosting is binary here, got {len(classes)} classes")
    ypm = np.fromiter((1.0 if v == classes[1] else -1.0 for v in y), float, count=len(y))
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)

    plan = stump_cuts(X)
    if plan is not None and plan[0].size:
        src, thr = plan
        identity = src.size == X.shape[1] and bool(np.all(thr == 0.5))
        Xe = X if identity else expand_stumps(X, src, thr)
        prob = kernels.PackedProblem(Xe[None], ypm[None], w[None])
        feats, pols, alphas = kernels.boost_binary(prob, cfg.rounds)
        keep = alphas[0] > 0.0
        f = feats[0][keep]
        return BoostModel(classes, src[f], thr[f], pols[0][keep], alphas[0][keep])
    return _train_general(X, ypm, w, classes, cfg)


def _train_general(X, ypm, w, classes, cfg):
    n, d = X.shape
    dist = w / w.sum()
    cands = []
    for f in range(d):
        vals = np.unique(X[:, f])
        mids = (vals[1:] + vals[:-1]) * 0.5
        for th in mids:
            cands.append((f, float(th)))
    if not cands:
        warnings.warn("all features constant", RuntimeWarning, stacklevel=3)
        maj = classes[1] if (w * (ypm > 0)).sum() * 2 > w.sum() else classes[0]
        return ConstantModel(maj)
    feats, ths, pols, alphas = [], [], [], []
    for _ in range(cfg.rounds):
        best = None
        for f, th in cands:
            h = np.where(X[:, f] > th, 1.0, -1.0)
            err = float(dist[h != ypm].sum())
            for pol, e in ((1.0, err), (-1.0, 1.0 - err)):
                if best is None or e < best[0] - 1e-15:
                    best = (e, f, th, pol)
        err, f, th, pol = best
        perfect = err < kernels.ERR_FLOOR
        if perfect:
            alpha = 0.5 * np.log((1.0 - kernels.ERR_FLOOR) / kernels.ERR_FLOOR)
        else:
            alpha = 0.5 * np.log((1.0 - err) / max(err, kernels.ERR_FLOOR))
        feats.append(f)
        ths.append(th)
        pols.append(pol)
        alphas.append(alpha)
        if perfect:
            break
        h = np.where(X[:, f] > th, 1.0, -1.0) * pol
        dist = dist * np.exp(-alpha * ypm * h)
        dist /= dist.sum()
    return BoostModel(classes, feats, ths, pols, alphas)
