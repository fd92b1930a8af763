"""Bagged Gini decision trees with per-node feature subsampling.

Each tree sees a bootstrap resample of exactly the training weight total,
drawn multinomially, and greedily splits on the feature/threshold pair with
the lowest weighted Gini impurity among a random subset of features
(round(sqrt(d)) by default). When the sampled subset offers no impurity
reduction the node retries with every feature before giving up, so
consistent data is always shattered at sufficient depth. The forest votes;
per-class scores are vote fractions.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..core import DataError
from .common import ConstantModel, ForestConfig, Model, register_model, validate_config

EPS = 1e-12


@register_model
class ForestModel(Model):
    kind = "forest"

    def __init__(self, classes, trees):
        self.classes = tuple(classes)
        self.trees = trees  # list of dicts of arrays

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((X.shape[0], len(self.classes)))
        rows = np.arange(X.shape[0])
        for tr in self.trees:
            feature, thresh = tr["feature"], tr["thresh"]
            left, right, leaf = tr["left"], tr["right"], tr["leaf"]
            node = np.zeros(X.shape[0], dtype=np.int64)
            while True:
                internal = feature[node] >= 0
                if not internal.any():
                    break
                idx = rows[internal]
                f = feature[node[idx]]
                go_left = X[idx, f] <= thresh[node[idx]]
                node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
            votes[rows, leaf[node]] += 1.0
        return votes / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "trees": [
                {k: t[k].tolist() for k in ("feature", "thresh", "left", "right", "leaf")}
                for t in self.trees
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ForestModel":
        trees = []
        for t in doc["trees"]:
            trees.append(
                {
                    "feature": np.array(t["feature"], np.int64),
                    "thresh": np.array(t["thresh"], float),
                    "left": np.array(t["left"], np.int64),
                    "right": np.array(t["right"], np.int64),
                    "leaf": np.array(t["leaf"], np.int64),
                }
            )
        return cls(doc["classes"], trees)


def _gini_split_binary(Xs, cw, idx, feats, min_leaf):
    """Best 0/1 feature split by weighted Gini; returns (score, feat) or None.

    cw is the per-row class-weight matrix; counts on the 1-side of every
    candidate feature come from one matmul.
    """
    sub = cw[idx]
    tot = sub.sum(axis=0)
    tot_w = tot.sum()
    right = Xs[idx][:, feats].T @ sub  # (k, C)
    left = tot[None, :] - right
    rw = right.sum(axis=1)
    lw = tot_w - rw
    with np.errstate(divide="ignore", invalid="ignore"):
        imp = np.where(rw > 0, rw - (right * right).sum(1) / np.maximum(rw, EPS), 0.0)
        imp += np.where(lw > 0, lw - (left * left).sum(1) / np.maximum(lw, EPS), 0.0)
    valid = (rw >= min_leaf) & (lw >= min_leaf)
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf)
    parent = tot_w - (tot * tot).sum() / tot_w
    j = int(np.argmin(imp))
    if imp[j] >= parent - 1e-10:
        return None
    return float(imp[j]), int(feats[j]), 0.5


def _gini_split_general(Xs, yi, w, idx, feats, min_leaf, n_classes):
    best = None
    ysub = yi[idx]
    wsub = w[idx]
    tot = np.bincount(ysub, weights=wsub, minlength=n_classes).astype(float)
    tot_w = tot.sum()
    parent = tot_w - (tot * tot).sum() / tot_w
    for f in feats:
        vals = Xs[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        distinct = np.nonzero(sv[1:] > sv[:-1])[0]
        if distinct.size == 0:
            continue
        cw = np.zeros((len(idx), n_classes))
        cw[np.arange(len(idx)), ysub[order]] = wsub[order]
        cum = np.cumsum(cw, axis=0)
        lc = cum[distinct]  # class weights with value <= midpoint
        lw = lc.sum(axis=1)
        rc = tot[None, :] - lc
        rw = tot_w - lw
        imp = (
            lw
            - (lc * lc).sum(1) / np.maximum(lw, EPS)
            + rw
            - (rc * rc).sum(1) / np.maximum(rw, EPS)
        )
        valid = (lw >= min_leaf) & (rw >= min_leaf)
        if not valid.any():
            continue
        imp = np.where(valid, imp, np.inf)
        j = int(np.argmin(imp))
        if imp[j] >= parent - 1e-10:
            continue
        th = float((sv[distinct[j]] + sv[distinct[j] + 1]) * 0.5)
        if best is None or imp[j] < best[0] - 1e-15:
            best = (float(imp[j]), int(f), th)
    return best


def _build_tree(Xs, yi, w, cfg, rng, n_classes, binary, cw):
    d = Xs.shape[1]
    k = cfg.feature_subsample or max(1, round(np.sqrt(d)))
    k = min(k, d)
    feature, thresh, left, right, leaf = [], [], [], [], []

    def majority(idx) -> int:
        counts = np.bincount(yi[idx], weights=w[idx], minlength=n_classes)
        return int(np.argmax(counts))

    def grow(idx, depth) -> int:
        node = len(feature)
        feature.append(-1)
        thresh.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf.append(-1)
        first = yi[idx[0]]
        pure = bool(np.all(yi[idx] == first))
        if pure or depth >= cfg.max_depth or w[idx].sum() < 2 * cfg.min_leaf:
            leaf[node] = majority(idx)
            return node
        feats = rng.choice(d, size=k, replace=False) if k < d else np.arange(d)
        if binary:
            found = _gini_split_binary(Xs, cw, idx, feats, cfg.min_leaf)
            if found is None and k < d:
                found = _gini_split_binary(Xs, cw, idx, np.arange(d), cfg.min_leaf)
        else:
            found = _gini_split_general(Xs, yi, w, idx, feats, cfg.min_leaf, n_classes)
            if found is None and k < d:
                found = _gini_split_general(
                    Xs, yi, w, idx, np.arange(d), cfg.min_leaf, n_classes
                )
        if found is None:
            leaf[node] = majority(idx)
            return node
        _, f, th = found
        mask = Xs[idx, f] <= th
        feature[node] = f
        thresh[node] = th
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(Xs.shape[0]), 0)
    return {
        "feature": np.array(feature, np.int64),
        "thresh": np.array(thresh, float),
        "left": np.array(left, np.int64),
        "right": np.array(right, np.int64),
        "leaf": np.array(leaf, np.int64),
    }


def train_forest(
    X: np.ndarray,
    y: list[str],
    cfg: ForestConfig | None = None,
    seed: int = 0,
    sample_weight=None,
):
    cfg = cfg or ForestConfig()
    from .common import TrainConfig

    validate_config(TrainConfig(forest=cfg))
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    classes = tuple(sorted(set(y)))
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    lut = {c: i for i, c in enumerate(classes)}
    yi = np.fromiter((lut[v] for v in y), np.int64, count=len(y))
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
    n_total = int(round(w.sum()))
    p = w / w.sum()
    rng = np.random.default_rng(seed)
    binary = bool(np.all((X == 0.0) | (X == 1.0)))
    trees = []
    import sys

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10000))
    try:
        for _ in range(cfg.n_trees):
            # bootstrap: exactly n_total draws over the (weighted) rows
            counts = rng.multinomial(n_total, p)
            idx = np.nonzero(counts)[0]
            bw = counts[idx].astype(float)
            Xs = X[idx]
            ys = yi[idx]
            cw = None
            if binary:
                cw = np.zeros((len(idx), len(classes)))
                cw[np.arange(len(idx)), ys] = bw
            trees.append(_build_tree(Xs, ys, bw, cfg, rng, len(classes), binary, cw))
    finally:
        sys.setrecursionlimit(old_limit)
    return ForestModel(classes, trees)
