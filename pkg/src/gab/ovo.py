"""One-vs-one multiclass reduction with confidence-weighted tie-breaking.

For C classes, every unordered pair (i, j), i < j in sorted-label order,
gets one binary model trained only on rows of those two classes, and only
on the feature columns that are active (nonzero) somewhere in those rows;
at prediction time each pair model consults exactly those columns, so
activity a pair never saw is deliberately invisible to it. A pair with
fewer than two training rows on either side (or no active columns at all)
is a constant stub that always votes for the larger side (lower class
index on an exact tie) and scores both sides by their training-count
fractions.

Prediction: every pair votes for one class (the side with score > 1/2, the
lower index on an exact tie). The label with the most votes wins; a vote
tie goes to the tied label with the larger aggregate confidence, the sum
over all C-1 of its pairs of its side's score; any remaining tie goes to
the lowest class index.

Two interchangeable engines produce the same predictions: a plain per-pair
loop (`train_ovo`, any trainer configuration) and a packed engine
(`train_ovo_packed`) that trains all pairs simultaneously through the
batched kernels and predicts via fused matrix products. The packed engine
requires deterministic full-batch trainers; linear-margin families
(SVM, and boosted stumps after the indicator expansion of integer
features) collapse to one global weight matrix and a single GEMM per
prediction chunk. Packed confidence sums pass through float32 staging, so
they can differ from the reference engine in the last few digits; votes
are exact either way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DataError
from .learn import (
    ConstantModel,
    Model,
    TrainConfig,
    model_from_dict,
    register_model,
    train_boost,
    train_mlp,
    train_svm,
)
from .learn import kernels
from .learn.boost import expand_stumps, stump_cuts

OVO_TRAINERS = ("svm", "boost", "mlp")

_PAIR_CACHE: dict[int, dict] = {}


def pair_count(n_classes: int) -> int:
    return n_classes * (n_classes - 1) // 2


def pair_structure(C: int) -> dict:
    """Index arrays for i-major pair enumeration: (0,1),(0,2),..,(1,2),..

    i-groups are contiguous runs sharing the lower class; perm_j reorders
    pairs into contiguous j-groups. Both enable grouped reductions.
    """
    if C in _PAIR_CACHE:
        return _PAIR_CACHE[C]
    sizes_i = np.arange(C - 1, 0, -1)
    i_idx = np.repeat(np.arange(C - 1), sizes_i)
    if C > 1:
        j_idx = np.concatenate([np.arange(i + 1, C) for i in range(C - 1)])
    else:
        j_idx = np.zeros(0, np.int64)
    i_starts = np.concatenate([[0], np.cumsum(sizes_i)[:-1]])
    perm_j = np.argsort(j_idx, kind="stable")
    sizes_j = np.arange(1, C)
    j_starts = np.concatenate([[0], np.cumsum(sizes_j)[:-1]])
    out = {
        "P": pair_count(C),
        "i_idx": i_idx.astype(np.int64),
        "j_idx": j_idx.astype(np.int64),
        "i_starts": i_starts.astype(np.int64),
        "i_sizes": sizes_i.astype(np.int64),
        "perm_j": perm_j.astype(np.int64),
        "j_starts": j_starts.astype(np.int64),
    }
    if C <= 2048:
        _PAIR_CACHE[C] = out
    return out


def pair_seed(seed: int, pair_index: int) -> np.random.SeedSequence:
    """Per-pair seed material, stable against how pairs are batched."""
    return np.random.SeedSequence(seed, spawn_key=(pair_index,))


@dataclass
class OvoPrediction:
    labels: list[str]
    votes: np.ndarray        # (n, C) integer-valued
    confidence: np.ndarray   # (n, C) aggregate per-class scores
    tie_broken: np.ndarray   # (n,) bool: vote tie resolved by confidence


def decide_votes(votes: np.ndarray, confidence: np.ndarray, classes) -> tuple[list[str], np.ndarray]:
    """Resolve vote counts to labels: max votes, then max aggregate
    confidence among the vote-tied, then lowest class index."""
    vmax = votes.max(axis=1, keepdims=True)
    tied = votes == vmax
    tie_broken = tied.sum(axis=1) > 1
    score = np.where(tied, confidence, -np.inf)
    idx = np.argmax(score, axis=1)  # first max: lowest index on equal confidence
    return [classes[k] for k in idx], tie_broken


@register_model
class StubPair(Model):
    """Constant pair model for starved pairs; scores are count fractions."""

    kind = "ovo-stub"

    def __init__(self, classes, p_pos: float):
        self.classes = tuple(classes)
        self.p_pos = float(p_pos)

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        p = np.full(X.shape[0], self.p_pos)
        return np.stack([1.0 - p, p], axis=1)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "classes": list(self.classes), "p": self.p_pos}

    @classmethod
    def from_dict(cls, doc: dict) -> "StubPair":
        return cls(doc["classes"], doc["p"])


def _class_rows(y) -> tuple[tuple[str, ...], list[np.ndarray]]:
    classes = tuple(sorted(set(y)))
    lut = {c: k for k, c in enumerate(classes)}
    yi = np.fromiter((lut[v] for v in y), np.int64, count=len(y))
    rows = [np.nonzero(yi == k)[0] for k in range(len(classes))]
    return classes, rows


def _pair_trainer(trainer: str, cfg: TrainConfig):
    if trainer == "svm":
        return lambda X, yy, ss, ww: train_svm(X, yy, cfg.svm, ss, sample_weight=ww)
    if trainer == "boost":
        return lambda X, yy, ss, ww: train_boost(X, yy, cfg.boost, ss, sample_weight=ww)
    if trainer == "mlp":
        return lambda X, yy, ss, ww: train_mlp(
            X, yy, cfg.mlp, ss, mode="binary", sample_weight=ww
        )
    raise DataError(f"unknown pair trainer {trainer!r}, expected one of {OVO_TRAINERS}")


@register_model
class OvoModel(Model):
    """Reference engine: one stored model per pair."""

    kind = "ovo"

    def __init__(self, classes, trainer: str, pairs: list[dict]):
        self.classes = tuple(classes)
        self.trainer = trainer
        self.pairs = pairs  # {"i", "j", "cols": ndarray, "model": Model}

    def predict_ovo(self, X: np.ndarray) -> OvoPrediction:
        n, C = X.shape[0], len(self.classes)
        votes = np.zeros((n, C))
        conf = np.zeros((n, C))
        for pair in self.pairs:
            i, j, cols, m = pair["i"], pair["j"], pair["cols"], pair["model"]
            p = m.predict_scores(X[:, cols])[:, 1]
            win_j = p > 0.5
            votes[:, j] += win_j
            votes[:, i] += ~win_j
            conf[:, j] += p
            conf[:, i] += 1.0 - p
        labels, tie_broken = decide_votes(votes, conf, self.classes)
        return OvoPrediction(labels, votes, conf, tie_broken)

    def predict(self, X: np.ndarray) -> list[str]:
        return self.predict_ovo(X).labels

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Vote fractions (votes / (C-1)); the decision itself also applies
        confidence tie-breaking, so argmax of these can differ from predict."""
        return self.predict_ovo(X).votes / max(1, len(self.classes) - 1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "trainer": self.trainer,
            "pairs": [
                {
                    "i": int(p["i"]),
                    "j": int(p["j"]),
                    "cols": np.asarray(p["cols"]).tolist(),
                    "model": p["model"].to_dict(),
                }
                for p in self.pairs
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OvoModel":
        pairs = []
        for p in doc["pairs"]:
            pairs.append(
                {
                    "i": p["i"],
                    "j": p["j"],
                    "cols": np.array(p["cols"], np.int64),
                    "model": model_from_dict(p["model"]),
                }
            )
        return cls(doc["classes"], doc["trainer"], pairs)


def train_ovo(
    X: np.ndarray,
    y,
    trainer: str,
    cfg: TrainConfig | None = None,
    seed: int = 0,
    sample_weight=None,
):
    """Per-pair loop engine. Any trainer mode; O(C^2) model fits."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, float)
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    classes, rows = _class_rows(y)
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, float)
    fit = _pair_trainer(trainer, cfg)
    weight = [float(w[r].sum()) for r in rows]
    pairs = []
    pidx = 0
    for i in range(len(classes) - 1):
        for j in range(i + 1, len(classes)):
            ri, rj = rows[i], rows[j]
            p_pos = weight[j] / (weight[i] + weight[j])
            if weight[i] < 2.0 or weight[j] < 2.0:
                model: Model = StubPair((classes[i], classes[j]), p_pos)
                cols = np.zeros(0, np.int64)
            else:
                idx = np.concatenate([ri, rj])
                sub = X[idx]
                cols = np.nonzero(sub.any(axis=0))[0]
                if cols.size == 0:
                    model = StubPair((classes[i], classes[j]), p_pos)
                else:
                    yy = [classes[i]] * len(ri) + [classes[j]] * len(rj)
                    model = fit(sub[:, cols], yy, pair_seed(seed, pidx), w[idx])
            pairs.append({"i": i, "j": j, "cols": cols, "model": model})
            pidx += 1
    return OvoModel(classes, trainer, pairs)


# ------------------------------------------------------------ packed engine


def _padded_class_rows(rows: list[np.ndarray], w: np.ndarray):
    """Per-class row indices and weights, padded to a rectangle."""
    C = len(rows)
    cnt = np.array([len(r) for r in rows], np.int64)
    rmax = int(cnt.max())
    CR = np.zeros((C, rmax), np.int64)
    CW = np.zeros((C, rmax))
    for k, r in enumerate(rows):
        CR[k, : len(r)] = r
        CW[k, : len(r)] = w[r]
    return CR, CW, cnt


def _pair_cols(mask_chunk: np.ndarray, dmax: int) -> np.ndarray:
    """Column ids (ascending) where the mask row is True, padded with the
    sentinel id D where a row has fewer than dmax active columns."""
    D = mask_chunk.shape[1]
    order = np.argsort(~mask_chunk, axis=1, kind="stable")[:, :dmax]
    valid = np.arange(dmax)[None, :] < mask_chunk.sum(axis=1)[:, None]
    return np.where(valid, order, D)


class _PackedBase(Model):
    """Shared prediction machinery: chunked pair scores -> votes/confidence."""

    classes: tuple[str, ...] = ()
    stub_p: np.ndarray  # (P,) NaN for trained pairs, else the stub's p

    def _pair_scores(self, X: np.ndarray, lo: int, hi: int) -> np.ndarray:
        raise NotImplementedError

    def _transform(self, X: np.ndarray) -> np.ndarray:
        return X

    def predict_ovo(self, X: np.ndarray) -> OvoPrediction:
        X = self._transform(np.asarray(X, float))
        C = len(self.classes)
        st = pair_structure(C)
        P = st["P"]
        n = X.shape[0]
        votes = np.zeros((n, C))
        conf = np.zeros((n, C))
        p_full = np.empty((n, P), np.float32)
        # chunks of whole i-groups, so grouped sums never straddle a boundary
        bounds = [0]
        budget = 8192
        g = 0
        while g < C - 1:
            end, total = g, 0
            while end < C - 1 and (total == 0 or total + st["i_sizes"][end] <= budget):
                total += int(st["i_sizes"][end])
                end += 1
            bounds.append(int(st["i_starts"][end - 1] + st["i_sizes"][end - 1]))
            g = end
        for b in range(len(bounds) - 1):
            lo, hi = bounds[b], bounds[b + 1]
            p = self._pair_scores(X, lo, hi)
            stubs = np.nonzero(~np.isnan(self.stub_p[lo:hi]))[0]
            if stubs.size:
                p[:, stubs] = self.stub_p[lo + stubs][None, :]
            p_full[:, lo:hi] = p
            gsel = (st["i_starts"] >= lo) & (st["i_starts"] < hi)
            ls = (st["i_starts"][gsel] - lo).astype(np.int64)
            sizes = st["i_sizes"][gsel].astype(float)
            ivals = np.nonzero(gsel)[0]
            win = (p > 0.5).astype(np.float32)  # 0/1 sums stay exact in f32
            votes[:, ivals] += sizes[None, :] - np.add.reduceat(win, ls, axis=1)
            conf[:, ivals] += sizes[None, :] - np.add.reduceat(p, ls, axis=1)
        # j-side sums: permute scores into contiguous j-groups, row-chunked
        perm = st["perm_j"]
        jstarts = st["j_starts"]
        for r0 in range(0, n, 256):
            r1 = min(n, r0 + 256)
            pp = p_full[r0:r1].take(perm, axis=1)
            win32 = (pp > 0.5).astype(np.float32)  # 0/1 sums stay exact in f32
            votes[r0:r1, 1:] += np.add.reduceat(win32, jstarts, axis=1)
            conf[r0:r1, 1:] += np.add.reduceat(pp, jstarts, axis=1)
        votes = np.rint(votes)
        labels, tie_broken = decide_votes(votes, conf, self.classes)
        return OvoPrediction(labels, votes, conf, tie_broken)

    def predict(self, X: np.ndarray) -> list[str]:
        return self.predict_ovo(X).labels

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        return self.predict_ovo(X).votes / max(1, len(self.classes) - 1)


@register_model
class PackedLinearOvo(_PackedBase):
    """All pair margins in one weight matrix: margins = X @ W + b.

    Serves both the SVM (logistic score) and boosted stumps, which are
    affine in the 0/1 inputs: each stump adds 2*alpha*polarity to its
    feature's weight and -alpha*polarity to the bias, and scores are the
    margin shifted into [0, 1] by the total alpha. For stumps over integer
    features W lives in the expanded indicator space and `expand` maps raw
    inputs into it before the product.
    """

    kind = "ovo-linear"

    def __init__(self, classes, W, b, score: str, alpha_sum=None, stub_p=None, expand=None):
        self.classes = tuple(classes)
        self.W = W  # (D, P)
        self.b = b  # (P,)
        self.score = score  # "logistic" | "margin"
        self.alpha_sum = alpha_sum
        self.stub_p = stub_p if stub_p is not None else np.full(W.shape[1], np.nan)
        self.expand = expand  # None | (src, thr) indicator columns

    def _transform(self, X):
        if self.expand is None:
            return X
        return expand_stumps(X, self.expand[0], self.expand[1])

    def _pair_scores(self, X, lo, hi):
        m = X @ self.W[:, lo:hi] + self.b[lo:hi]
        if self.score == "logistic":
            # squash in f32, the precision of the staging buffer the scores
            # land in anyway; only scores within f32 rounding of 0.5 move
            return kernels.sigmoid(m.astype(np.float32))
        return 0.5 + m / (2.0 * self.alpha_sum[lo:hi])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "W": self.W.tolist(),
            "b": self.b.tolist(),
            "score": self.score,
            "alpha_sum": None if self.alpha_sum is None else self.alpha_sum.tolist(),
            "stub_p": [None if np.isnan(v) else float(v) for v in self.stub_p],
            "expand": None
            if self.expand is None
            else {"src": self.expand[0].tolist(), "thr": self.expand[1].tolist()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PackedLinearOvo":
        ex = doc.get("expand")
        return cls(
            doc["classes"],
            np.array(doc["W"], float),
            np.array(doc["b"], float),
            doc["score"],
            alpha_sum=None if doc.get("alpha_sum") is None else np.array(doc["alpha_sum"], float),
            stub_p=np.array([np.nan if v is None else v for v in doc["stub_p"]], float),
            expand=None if ex is None else (np.array(ex["src"], np.int64), np.array(ex["thr"], float)),
        )


@register_model
class PackedMlpOvo(_PackedBase):
    """Per-pair small tanh nets; layer 1 of a pair chunk is evaluated as one
    GEMM against a scatter-built weight matrix over global columns."""

    kind = "ovo-mlp"

    def __init__(self, classes, cols, dcnt, W1, b1, W2, b2, stub_p):
        self.classes = tuple(classes)
        self.cols = cols  # (P, dstore) global column ids, sentinel D padding
        self.dcnt = dcnt  # (P,)
        self.W1 = W1      # (P, dstore, H)
        self.b1 = b1      # (P, H)
        self.W2 = W2      # (P, H)
        self.b2 = b2      # (P,)
        self.stub_p = stub_p

    def _pair_scores(self, X, lo, hi):
        D = X.shape[1]
        Pc = hi - lo
        H = self.W1.shape[2]
        cat = np.zeros((D + 1, Pc * H))  # sentinel row absorbs padding writes
        rowt = self.cols[lo:hi][:, :, None]
        colt = (np.arange(Pc) * H)[:, None, None] + np.arange(H)[None, None, :]
        cat[rowt, colt] = self.W1[lo:hi]
        Z = X @ cat[:D] + self.b1[lo:hi].reshape(-1)
        np.tanh(Z, out=Z)
        A = Z.reshape(X.shape[0], Pc, H)
        z2 = np.einsum("nph,ph->np", A, self.W2[lo:hi]) + self.b2[lo:hi]
        return kernels.sigmoid(z2.astype(np.float32))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "classes": list(self.classes),
            "cols": self.cols.tolist(),
            "dcnt": self.dcnt.tolist(),
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "W2": self.W2.tolist(),
            "b2": self.b2.tolist(),
            "stub_p": [None if np.isnan(v) else float(v) for v in self.stub_p],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PackedMlpOvo":
        return cls(
            doc["classes"],
            np.array(doc["cols"], np.int64),
            np.array(doc["dcnt"], np.int64),
            np.array(doc["W1"], float),
            np.array(doc["b1"], float),
            np.array(doc["W2"], float),
            np.array(doc["b2"], float),
            np.array([np.nan if v is None else v for v in doc["stub_p"]], float),
        )


def train_ovo_packed(
    X: np.ndarray,
    y,
    trainer: str,
    cfg: TrainConfig | None = None,
    seed: int = 0,
    sample_weight=None,
):
    """Packed engine: same pair semantics as train_ovo, one kernel call per
    chunk of pairs sorted by problem size. Requires a deterministic
    full-batch trainer configuration (svm mode full-batch, mlp batch null);
    boosted stumps additionally require small non-negative integer features
    (they are trained in the expanded indicator space)."""
    cfg = cfg or TrainConfig()
    X = np.asarray(X, float)
    if X.ndim != 2 or X.shape[0] != len(y) or X.shape[0] == 0:
        raise DataError("matrix and labels disagree or are empty")
    if trainer not in OVO_TRAINERS:
        raise DataError(f"unknown pair trainer {trainer!r}")
    if trainer == "svm" and cfg.svm.mode != "full-batch":
        raise DataError("packed engine needs svm mode 'full-batch'")
    if trainer == "mlp" and cfg.mlp.batch is not None:
        raise DataError("packed engine needs full-batch mlp (batch null)")
    expand = None
    if trainer == "boost":
        plan = stump_cuts(X)
        if plan is None:
            raise DataError("packed boosting needs small non-negative integer features")
        src, thr = plan
        if not (src.size == X.shape[1] and bool(np.all(thr == 0.5))):
            X = expand_stumps(X, src, thr)  # identity skipped: X already 0/1
            expand = (src, thr)

    classes, rows = _class_rows(y)
    if len(classes) == 1:
        warnings.warn("training data has a single class", RuntimeWarning, stacklevel=2)
        return ConstantModel(classes[0])
    C = len(classes)
    n, D = X.shape
    w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, float)
    st = pair_structure(C)
    P = st["P"]
    i_idx, j_idx = st["i_idx"], st["j_idx"]

    CR, CW, cnt = _padded_class_rows(rows, w)
    class_weight = CW.sum(axis=1)
    class_mask = np.zeros((C, D), bool)
    for k, r in enumerate(rows):
        class_mask[k] = (X[r] != 0.0).any(axis=0)

    wi, wj = class_weight[i_idx], class_weight[j_idx]
    stub = (wi < 2.0) | (wj < 2.0)
    d_p = np.zeros(P, np.int64)
    r_p = cnt[i_idx] + cnt[j_idx]
    cand = np.nonzero(~stub)[0]
    for s in range(0, cand.size, 65536):  # slabs bound the (Pc, D) masks
        t = cand[s : s + 65536]
        pm = class_mask[i_idx[t]] | class_mask[j_idx[t]]
        d_p[t] = pm.sum(axis=1)
    stub |= (~stub) & (d_p == 0)  # no active column anywhere: nothing to fit
    stub_p = np.full(P, np.nan)
    stub_p[stub] = wj[stub] / (wi[stub] + wj[stub])
    trainable = np.nonzero(~stub)[0]

    H = cfg.mlp.hidden
    if trainer in ("svm", "boost"):
        W_all = np.zeros((D + 1, P))  # sentinel row catches padded columns
        b_all = np.zeros(P)
        alpha_sum = np.ones(P)
    else:
        dstore = max(int(d_p.max(initial=1)), 1)
        m_cols = np.full((P, dstore), D, np.int64)
        m_dcnt = np.zeros(P, np.int64)
        m_W1 = np.zeros((P, dstore, H))
        m_b1 = np.zeros((P, H))
        m_W2 = np.zeros((P, H))
        m_b2 = np.zeros(P)

    order = trainable[np.lexsort((d_p[trainable], r_p[trainable]))]
    X1 = np.concatenate([X, np.zeros((n, 1))], axis=1)
    budget = 6_000_000
    s = 0
    while s < order.size:
        e, rm, dm = s, 1, 1
        while e < order.size:
            rm2 = max(rm, int(r_p[order[e]]))
            dm2 = max(dm, int(d_p[order[e]]))
            if e > s and (e - s + 1) * rm2 * dm2 > budget:
                break
            rm, dm = rm2, dm2
            e += 1
        chunk = order[s:e]
        s = e
        out = _train_chunk(
            chunk, X1, CR, CW, cnt, class_mask, i_idx, j_idx, trainer, cfg, seed
        )
        ccols, cd = out["cols"], out["d"]
        Pc, dmax = ccols.shape
        if trainer == "svm":
            W_all[ccols, chunk[:, None]] = out["W"]  # sentinel absorbs padding
            b_all[chunk] = out["b"]
        elif trainer == "boost":
            feats, pols, alphas = out["extra"]
            fglob = np.take_along_axis(ccols, feats, axis=1)
            np.add.at(W_all, (fglob, chunk[:, None]), 2.0 * alphas * pols)
            b_all[chunk] = -(alphas * pols).sum(axis=1)
            asum = alphas.sum(axis=1)
            alpha_sum[chunk] = np.where(asum > 0, asum, 1.0)
        else:
            W1, b1, W2, b2 = out["extra"]
            m_cols[chunk, :dmax] = ccols
            m_dcnt[chunk] = cd
            m_W1[chunk, :dmax, :] = W1
            m_b1[chunk] = b1
            m_W2[chunk] = W2
            m_b2[chunk] = b2

    if trainer == "svm":
        return PackedLinearOvo(classes, W_all[:D], b_all, "logistic", stub_p=stub_p)
    if trainer == "boost":
        return PackedLinearOvo(
            classes, W_all[:D], b_all, "margin",
            alpha_sum=alpha_sum, stub_p=stub_p, expand=expand,
        )
    return PackedMlpOvo(classes, m_cols, m_dcnt, m_W1, m_b1, m_W2, m_b2, stub_p)


def _train_chunk(chunk, X1, CR, CW, cnt, class_mask, i_idx, j_idx, trainer, cfg, seed):
    """Assemble one padded (Pc, R, D') problem tensor and run its kernel."""
    ii, jj = i_idx[chunk], j_idx[chunk]
    ci, cj = cnt[ii], cnt[jj]
    rim, rjm = int(ci.max()), int(cj.max())
    mask = class_mask[ii] | class_mask[jj]
    d = mask.sum(axis=1)
    cols = _pair_cols(mask, int(d.max()))  # (Pc, dmax), sentinel D padded
    rows = np.concatenate([CR[ii][:, :rim], CR[jj][:, :rjm]], axis=1)
    wvec = np.concatenate([CW[ii][:, :rim], CW[jj][:, :rjm]], axis=1)
    valid = np.concatenate(
        [
            np.arange(rim)[None, :] < ci[:, None],
            np.arange(rjm)[None, :] < cj[:, None],
        ],
        axis=1,
    )
    wvec = wvec * valid
    yvec = np.concatenate(
        [np.full((len(chunk), rim), -1.0), np.full((len(chunk), rjm), 1.0)], axis=1
    )
    Xt = X1[rows[:, :, None], cols[:, None, :]]
    Xt *= valid[:, :, None]  # padding rows must not leak into column masks
    prob = kernels.PackedProblem(Xt, yvec, wvec)

    out = {"cols": cols, "d": d}
    if trainer == "svm":
        W, b, _ = kernels.svm_fullbatch(
            prob, cfg.svm.c, cfg.svm.learning_rate, cfg.svm.epochs
        )
        out["W"], out["b"] = W, b
    elif trainer == "boost":
        out["extra"] = kernels.boost_binary(prob, cfg.boost.rounds)
    else:
        H = cfg.mlp.hidden
        raw = np.zeros((len(chunk), int(d.max()), H))
        for k, gp in enumerate(chunk):
            rng = np.random.default_rng(pair_seed(seed, int(gp)))
            raw[k, : d[k], :] = rng.uniform(-1.0, 1.0, size=(int(d[k]), H))
        out["extra"], _ = kernels.mlp_binary_fullbatch(
            prob, H, cfg.mlp.learning_rate, cfg.mlp.epochs, cfg.mlp.l2, raw, d
        )
    return out


def ensemble_vote(member_labels: list[list[str]], member_conf: list[np.ndarray]) -> list[str]:
    """Majority vote across classifiers; ties go to the tied label with the
    highest mean confidence among the members that voted for it, then to
    the lexicographically smallest label."""
    if not member_labels:
        raise DataError("ensemble needs at least one member")
    n = len(member_labels[0])
    if any(len(lab) != n for lab in member_labels):
        raise DataError("ensemble members disagree on row count")
    out = []
    for r in range(n):
        counts: dict[str, int] = {}
        confs: dict[str, list[float]] = {}
        for m, labels in enumerate(member_labels):
            lab = labels[r]
            counts[lab] = counts.get(lab, 0) + 1
            confs.setdefault(lab, []).append(float(member_conf[m][r]))
        top = max(counts.values())
        tied = [lab for lab, c in counts.items() if c == top]
        best = min(tied, key=lambda lab: (-(sum(confs[lab]) / len(confs[lab])), lab))
        out.append(best)
    return out
