import warnings

import numpy as np
import pytest

from gab.core import DataError
from gab.learn.common import ConstantModel, MlpConfig
from gab.learn.mlp import MlpModel, loss_and_grad, train_mlp

from oracles import fd_gradients, max_relative_error


def random_params(rng, d, H, C=None):
    p = {
        "W1": rng.normal(scale=0.5, size=(d, H)),
        "b1": rng.normal(scale=0.2, size=H),
    }
    if C is None:  # binary head
        p["W2"] = rng.normal(scale=0.5, size=H)
        p["b2"] = float(rng.normal())
    else:
        p["W2"] = rng.normal(scale=0.5, size=(H, C))
        p["b2"] = rng.normal(scale=0.2, size=C)
    return p


def test_multiclass_gradients_match_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(6):
        n, d, H, C = rng.integers(3, 9), rng.integers(2, 6), rng.integers(1, 5), rng.integers(2, 5)
        X = rng.normal(size=(n, d))
        T = np.zeros((n, C))
        T[np.arange(n), rng.integers(C, size=n)] = 1.0
        w = rng.uniform(0.5, 2.0, size=n)
        params = random_params(rng, d, H, C)
        _, grads = loss_and_grad(params, X, T, 0.01, w)
        fd = fd_gradients(lambda p: loss_and_grad(p, X, T, 0.01, w)[0], params)
        assert max_relative_error(grads, fd) < 1e-4


def test_binary_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    for _ in range(6):
        n, d, H = rng.integers(3, 9), rng.integers(2, 6), rng.integers(1, 5)
        X = rng.normal(size=(n, d))
        ypm = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        w = rng.uniform(0.5, 2.0, size=n)
        params = random_params(rng, d, H)
        _, grads = loss_and_grad(params, X, ypm, 0.01, w, mode="binary")
        fd = fd_gradients(
            lambda p: loss_and_grad(p, X, ypm, 0.01, w, mode="binary")[0], params
        )
        assert max_relative_error(grads, fd) < 1e-4


def test_untrained_net_scores_the_prior():
    """With zero epochs the output layer is zero, so scores equal class rates."""
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.0, 0.0]])
    y = ["a", "b", "b", "b"]
    m = train_mlp(X, y, MlpConfig(hidden=4, epochs=0), seed=0)
    s = m.predict_scores(X)
    assert np.allclose(s[:, 0], 0.25)
    assert np.allclose(s[:, 1], 0.75)
    mb = train_mlp(X, y, MlpConfig(hidden=4, epochs=0, batch=2), mode="binary", seed=0)
    assert np.allclose(mb.predict_scores(X)[:, 1], 0.75)


def _fullbatch_losses(X, y, cfg, seed, mode):
    """Epoch-end losses recomputed from scratch at increasing epoch budgets."""
    classes = sorted(set(y))
    losses = []
    for e in range(cfg.epochs + 1):
        m = train_mlp(
            X, y, MlpConfig(cfg.hidden, e, cfg.learning_rate, cfg.l2), seed=seed, mode=mode
        )
        params = {"W1": m.W1, "b1": m.b1, "W2": m.W2, "b2": m.b2}
        if mode == "binary":
            enc = np.fromiter((1.0 if v == classes[1] else -1.0 for v in y), float)
        else:
            enc = np.zeros((len(y), len(classes)))
            lut = {c: i for i, c in enumerate(classes)}
            enc[np.arange(len(y)), [lut[v] for v in y]] = 1.0
        losses.append(loss_and_grad(params, X, enc, cfg.l2, mode=mode)[0])
    return losses


@pytest.mark.parametrize("mode", ["multiclass", "binary"])
def test_fullbatch_loss_never_increases(mode):
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 4))
    y = [f"c{k}" for k in rng.integers(2 if mode == "binary" else 3, size=30)]
    losses = _fullbatch_losses(X, y, MlpConfig(hidden=5, epochs=12, learning_rate=0.6), 3, mode)
    assert all(b <= a + 1e-9 for a, b in zip(losses, losses[1:]))


def test_adaptive_step_solves_xor():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 4)
    y = ["n", "y", "y", "n"] * 4
    m = train_mlp(X, y, MlpConfig(hidden=4, epochs=200, learning_rate=0.5), seed=1)
    assert m.predict(X) == y


def test_binary_mode_validates_class_count():
    X = np.eye(3)
    with pytest.raises(DataError, match="binary"):
        train_mlp(X, ["a", "b", "c"], MlpConfig(hidden=2, epochs=1), mode="binary")
    with pytest.raises(DataError, match="unknown mlp mode"):
        train_mlp(X, ["a", "b", "a"], MlpConfig(hidden=2, epochs=1), mode="ternary")


def test_single_class_degenerates_to_constant():
    with pytest.warns(RuntimeWarning, match="single class"):
        m = train_mlp(np.eye(3), ["a", "a", "a"], MlpConfig(hidden=2, epochs=1))
    assert isinstance(m, ConstantModel)
    assert m.predict(np.eye(3)) == ["a", "a", "a"]


def test_shared_first_layer_draw_is_batch_invariant():
    """w1_init lets a caller pin the first-layer init; same draw, same model."""
    rng = np.random.default_rng(5)
    X = rng.normal(size=(20, 3))
    y = [f"c{k}" for k in rng.integers(2, size=20)]
    raw = np.random.default_rng(11).uniform(-1, 1, size=(3, 4))
    a = train_mlp(X, y, MlpConfig(hidden=4, epochs=9), seed=0, mode="binary", w1_init=raw)
    b = train_mlp(X, y, MlpConfig(hidden=4, epochs=9), seed=99, mode="binary", w1_init=raw)
    assert np.array_equal(a.W1, b.W1) and np.array_equal(a.W2, b.W2)


def test_minibatch_paths_train(small_matrix):
    X, y = small_matrix
    for mode, labels in (("multiclass", y), ("binary", [v.split("/")[0] for v in y])):
        if mode == "binary":
            labels = ["lo" if hash(v) % 2 else "hi" for v in y]
        m = train_mlp(X[:80], labels[:80], MlpConfig(hidden=6, epochs=5, batch=16), seed=2, mode=mode)
        assert isinstance(m, MlpModel)
        got = m.predict(X[:80])
        assert set(got) <= set(labels)


def test_model_serialization_roundtrip():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 3))
    y = [f"c{k}" for k in rng.integers(3, size=12)]
    m = train_mlp(X, y, MlpConfig(hidden=3, epochs=5), seed=1)
    back = MlpModel.from_dict(m.to_dict())
    assert np.allclose(back.predict_scores(X), m.predict_scores(X))
    assert back.predict(X) == m.predict(X)


def test_weighted_equals_duplicated():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(10, 3))
    y = [f"c{k}" for k in rng.integers(2, size=10)]
    Xd = np.concatenate([X, X[:4]])
    yd = y + y[:4]
    w = np.ones(10)
    w[:4] = 2.0
    raw = np.random.default_rng(2).uniform(-1, 1, size=(3, 4))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = train_mlp(X, y, MlpConfig(hidden=4, epochs=15), sample_weight=w, w1_init=raw)
        b = train_mlp(Xd, yd, MlpConfig(hidden=4, epochs=15), w1_init=raw)
    assert np.allclose(a.W1, b.W1, atol=1e-9)
    assert np.allclose(a.W2, b.W2, atol=1e-9)
