"""Batched full-batch trainers for binary classifiers.

Each kernel trains P independent binary problems at once on a padded tensor
(P, R, D): P problems, up to R weighted rows each, up to D feature columns
each. Padding rows carry weight 0 and padding columns are all-zero, so they
contribute nothing to losses or gradients. A single problem is the P=1 case;
the per-problem trainers in svm.py / mlp.py / boost.py call these kernels so
there is exactly one implementation of the math.

All kernels are deterministic given their inputs; none consults a global
RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BACKTRACK_LIMIT = 30
STEP_GROWTH_CAP = 16384.0  # adaptive step may grow to this multiple of the base rate
ERR_FLOOR = 1e-12
S_TOL = 1e-9  # stump correlations closer than this count as tied


def sigmoid(z: np.ndarray) -> np.ndarray:
    # one exp over -|z|, mirrored onto the negative side; stable without
    # the boolean gathers, which dominate on wide score blocks
    e = np.exp(-np.abs(z))
    out = 1.0 / (1.0 + e)
    np.subtract(1.0, out, out=out, where=z < 0.0)
    return out


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


@dataclass
class PackedProblem:
    """P binary problems, padded to common row/column counts.

    X: (P, R, D) float64, y: (P, R) in {-1, +1}, w: (P, R) >= 0.
    Rows with w == 0 are padding; columns beyond a problem's true width must
    be all-zero in X.
    """

    X: np.ndarray
    y: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.wsum = self.w.sum(axis=1)
        if np.any(self.wsum <= 0):
            raise ValueError("every packed problem needs positive total weight")

    @property
    def shape(self):
        return self.X.shape


# ---------------------------------------------------------------- linear SVM


def svm_objective(prob: PackedProblem, W: np.ndarray, b: np.ndarray, c: float):
    """Hinge loss (weighted mean) plus L2 term, per problem.

    J = ||W||^2 / (2 c wsum) + (1/wsum) sum_i w_i max(0, 1 - y_i f(x_i))
    This scaling makes J invariant to duplicating every row, which is what
    lets duplicate rows collapse to integer weights exactly.
    """
    margins = np.matmul(prob.X, W[:, :, None])[:, :, 0] + b[:, None]
    hinge = np.maximum(0.0, 1.0 - prob.y * margins)
    data = (prob.w * hinge).sum(axis=1) / prob.wsum
    reg = (W * W).sum(axis=1) / (2.0 * c * prob.wsum)
    return data + reg, margins


def svm_fullbatch(prob: PackedProblem, c: float, lr: float, epochs: int):
    """Full-batch subgradient descent from zero init; returns the iterate
    with the lowest objective seen (epoch-end checkpoints, init included)."""
    P, R, D = prob.shape
    W = np.zeros((P, D))
    b = np.zeros(P)
    best_j = np.full(P, np.inf)
    best_w = np.zeros_like(W)
    best_b = np.zeros_like(b)
    for t in range(epochs + 1):
        J, margins = svm_objective(prob, W, b, c)
        better = J < best_j
        if better.any():
            best_j[better] = J[better]
            best_w[better] = W[better]
            best_b[better] = b[better]
        if t == epochs:
            break
        viol = (prob.y * margins) < 1.0
        coef = np.where(viol, prob.w * prob.y, 0.0)  # (P, R)
        gW = (
            -np.matmul(coef[:, None, :], prob.X)[:, 0, :] / prob.wsum[:, None]
            + W / (c * prob.wsum[:, None])
        )
        gb = -coef.sum(axis=1) / prob.wsum
        W -= lr * gW
        b -= lr * gb
    return best_w, best_b, best_j


# ------------------------------------------------------------- binary MLP


def mlp_binary_init(
    prob: PackedProblem, hidden: int, w1_raw: np.ndarray, dims: np.ndarray
):
    """Initial parameters: W1 scaled uniform, W2 zero, b2 at the class prior.

    w1_raw is uniform(-1, 1) of shape (P, D, H); each problem scales it by
    sqrt(6 / (true_width + hidden)) and zeroes its padding rows. Zero W2
    plus prior b2 makes the untrained score exactly the positive-class
    weight fraction.
    """
    P, R, D = prob.shape
    scale = np.sqrt(6.0 / (dims.astype(float) + hidden))
    W1 = w1_raw * scale[:, None, None]
    colmask = np.arange(D)[None, :] < dims[:, None]  # (P, D)
    W1 *= colmask[:, :, None]
    b1 = np.zeros((P, hidden))
    W2 = np.zeros((P, hidden))
    pos = (prob.w * (prob.y > 0)).sum(axis=1) / prob.wsum
    pos = np.clip(pos, 1e-12, 1.0 - 1e-12)
    b2 = np.log(pos / (1.0 - pos))
    return W1, b1, W2, b2


def mlp_binary_loss(prob, W1, b1, W2, b2, l2, need_grads: bool):
    """Weighted mean logistic loss of tanh-hidden nets, plus L2 on weights."""
    Z1 = np.matmul(prob.X, W1) + b1[:, None, :]  # (P, R, H)
    A = np.tanh(Z1)
    z = np.matmul(A, W2[:, :, None])[:, :, 0] + b2[:, None]  # (P, R)
    data = (prob.w * softplus(-prob.y * z)).sum(axis=1) / prob.wsum
    reg = 0.5 * l2 * ((W1 * W1).sum(axis=(1, 2)) + (W2 * W2).sum(axis=1))
    L = data + reg
    if not need_grads:
        return L, None
    target = (prob.y + 1.0) * 0.5
    dz = prob.w * (sigmoid(z) - target) / prob.wsum[:, None]  # (P, R)
    gW2 = np.matmul(A.transpose(0, 2, 1), dz[:, :, None])[:, :, 0] + l2 * W2
    gb2 = dz.sum(axis=1)
    dA = dz[:, :, None] * W2[:, None, :]
    dZ1 = dA * (1.0 - A * A)
    gW1 = np.matmul(prob.X.transpose(0, 2, 1), dZ1) + l2 * W1
    gb1 = dZ1.sum(axis=1)
    return L, (gW1, gb1, gW2, gb2)


def _subproblem(prob: PackedProblem, idx: np.ndarray) -> PackedProblem:
    return PackedProblem(prob.X[idx], prob.y[idx], prob.w[idx])


def mlp_binary_fullbatch(
    prob: PackedProblem,
    hidden: int,
    lr: float,
    epochs: int,
    l2: float,
    w1_raw: np.ndarray,
    dims: np.ndarray,
):
    """Gradient descent with a per-problem adaptive step size.

    A step that would raise a problem's loss is retried with half the step
    until it does not (up to BACKTRACK_LIMIT halvings); a step accepted at
    the first try doubles the problem's step for the next epoch, up to
    STEP_GROWTH_CAP times the base rate. The epoch-end loss sequence is
    non-increasing for every problem.
    """
    W1, b1, W2, b2 = mlp_binary_init(prob, hidden, w1_raw, dims)
    P = prob.shape[0]
    step = np.full(P, float(lr))
    cap = float(lr) * STEP_GROWTH_CAP
    L, grads = mlp_binary_loss(prob, W1, b1, W2, b2, l2, need_grads=epochs > 0)
    for t in range(epochs):
        gW1, gb1, gW2, gb2 = grads
        nW1 = W1 - step[:, None, None] * gW1
        nb1 = b1 - step[:, None] * gb1
        nW2 = W2 - step[:, None] * gW2
        nb2 = b2 - step * gb2
        nL, _ = mlp_binary_loss(prob, nW1, nb1, nW2, nb2, l2, need_grads=False)
        worse = ~(nL <= L + 1e-12)  # NaN-safe: a NaN trial loss is worse
        clean = ~worse
        tries = 0
        while worse.any() and tries < BACKTRACK_LIMIT:
            idx = np.nonzero(worse)[0]
            step[idx] *= 0.5
            sub = _subproblem(prob, idx)
            tW1 = W1[idx] - step[idx, None, None] * gW1[idx]
            tb1 = b1[idx] - step[idx, None] * gb1[idx]
            tW2 = W2[idx] - step[idx, None] * gW2[idx]
            tb2 = b2[idx] - step[idx] * gb2[idx]
            tL, _ = mlp_binary_loss(sub, tW1, tb1, tW2, tb2, l2, need_grads=False)
            ok = tL <= L[idx] + 1e-12
            acc = idx[ok]
            nW1[acc], nb1[acc], nW2[acc], nb2[acc] = (
                tW1[ok],
                tb1[ok],
                tW2[ok],
                tb2[ok],
            )
            nL[acc] = tL[ok]
            worse = np.zeros(P, dtype=bool)
            worse[idx[~ok]] = True
            tries += 1
        if worse.any():  # no acceptable step found: stay put this epoch
            idx = np.nonzero(worse)[0]
            nW1[idx], nb1[idx], nW2[idx], nb2[idx] = W1[idx], b1[idx], W2[idx], b2[idx]
            nL[idx] = L[idx]
        np.minimum(np.where(clean, step * 2.0, step), cap, out=step)
        W1, b1, W2, b2, L = nW1, nb1, nW2, nb2, nL
        if t + 1 < epochs:
            _, grads = mlp_binary_loss(prob, W1, b1, W2, b2, l2, need_grads=True)
    return (W1, b1, W2, b2), L


# ------------------------------------------------------- boosted stumps


def boost_binary(prob: PackedProblem, rounds: int):
    """AdaBoost over depth-1 stumps for strictly binary (0/1) features.

    Candidate stumps are sign(x_d - 0.5) and its negation; the weighted
    class-correlation S_d = sum_r D_r y_r (2 x_rd - 1) gives the better
    polarity err = (1 - |S_d|) / 2 directly. Correlations within S_TOL of
    the round's best count as tied and the lowest column index wins, so the
    pick is stable against summation order (padded and unpadded layouts of
    the same problem reduce in different orders). A problem stops growing
    once a stump is perfect or no stump beats chance by at least S_TOL; its
    remaining rounds get weight 0.
    """
    P, R, D = prob.shape
    dist = prob.w / prob.wsum[:, None]
    colmask = (prob.X > 0).any(axis=1).astype(float)  # ignore all-zero padding cols
    feats = np.zeros((P, rounds), dtype=np.int64)
    pols = np.zeros((P, rounds))
    alphas = np.zeros((P, rounds))
    live = np.ones(P, dtype=bool)
    alpha_cap = 0.5 * np.log((1.0 - ERR_FLOOR) / ERR_FLOOR)
    for t in range(rounds):
        if not live.any():
            break
        dy = dist * prob.y
        S = 2.0 * np.matmul(dy[:, None, :], prob.X)[:, 0, :] - dy.sum(1)[:, None]
        S = S * colmask
        A = np.abs(S)
        top = A.max(axis=1, keepdims=True)
        best = np.argmax(A >= top - S_TOL, axis=1)  # first near-tied column
        s_best = np.take_along_axis(S, best[:, None], axis=1)[:, 0]
        live = live & (np.abs(s_best) >= S_TOL)
        if not live.any():
            break
        pol = np.where(s_best >= 0.0, 1.0, -1.0)
        err = np.clip((1.0 - np.abs(s_best)) * 0.5, 0.0, 1.0)
        perfect = err < ERR_FLOOR
        alpha = np.where(
            perfect, alpha_cap, 0.5 * np.log((1.0 - err) / np.maximum(err, ERR_FLOOR))
        )
        feats[live, t] = best[live]
        pols[live, t] = pol[live]
        alphas[live, t] = alpha[live]
        # reweight toward the rows this stump got wrong
        x_best = np.take_along_axis(prob.X, best[:, None, None], axis=2)[:, :, 0]
        h = pol[:, None] * (2.0 * x_best - 1.0)
        upd = live & ~perfect
        if upd.any():
            nd = dist[upd] * np.exp(-alphas[upd, t][:, None] * prob.y[upd] * h[upd])
            dist[upd] = nd / nd.sum(axis=1, keepdims=True)
        live = live & ~perfect
    return feats, pols, alphas
