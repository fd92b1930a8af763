import numpy as np
import pytest

from gab.core import DataError
from gab.learn.common import ConstantModel, SvmConfig
from gab.learn.svm import SvmModel, svm_objective, train_svm


def hinge_objective(X, ypm, w, W, b, c):
    """Direct transcription: mean weighted hinge plus L2 at lambda = 1/(c*wsum)."""
    margins = ypm * (X @ W + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    wsum = w.sum()
    lam = 1.0 / (c * wsum)
    return float((w * hinge).sum() / wsum + 0.5 * lam * (W @ W))


def test_objective_matches_direct_formula():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n, d = rng.integers(2, 12), rng.integers(1, 6)
        X = rng.normal(size=(n, d))
        ypm = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        w = rng.uniform(0.1, 3.0, size=n)
        W = rng.normal(size=d)
        b = float(rng.normal())
        c = float(rng.uniform(0.2, 5.0))
        assert svm_objective(X, ypm, w, W, b, c) == pytest.approx(
            hinge_objective(X, ypm, w, W, b, c), rel=1e-12
        )


@pytest.mark.parametrize("mode", ["per-sample", "full-batch"])
def test_result_never_worse_than_zero(mode):
    """The returned iterate is the best epoch-end objective, floor included."""
    rng = np.random.default_rng(4)
    X = rng.normal(size=(40, 5))
    y = ["p" if v > 0 else "q" for v in rng.normal(size=40)]
    cfg = SvmConfig(c=1.0, epochs=8, learning_rate=5.0, mode=mode)  # hot rate on purpose
    m = train_svm(X, y, cfg, seed=0)
    ypm = np.fromiter((1.0 if v == m.classes[1] else -1.0 for v in y), float)
    w = np.ones(40)
    zero = svm_objective(X, ypm, w, np.zeros(5), 0.0, 1.0)
    assert svm_objective(X, ypm, w, m.w, m.b, 1.0) <= zero + 1e-12


@pytest.mark.parametrize("mode", ["per-sample", "full-batch"])
def test_separates_separable_data(mode):
    rng = np.random.default_rng(8)
    X = np.concatenate([rng.normal(-3.0, 0.4, size=(25, 2)), rng.normal(3.0, 0.4, size=(25, 2))])
    y = ["neg"] * 25 + ["pos"] * 25
    m = train_svm(X, y, SvmConfig(c=10.0, epochs=40, learning_rate=0.1, mode=mode), seed=1)
    assert m.predict(X) == y


def test_scores_are_sigmoid_of_decision():
    m = SvmModel(("a", "b"), [1.0, -2.0], 0.5)
    X = np.array([[1.0, 1.0], [0.0, 0.0], [-2.0, 0.25]])
    s = m.predict_scores(X)
    z = X @ m.w + m.b
    assert np.allclose(s[:, 1], 1.0 / (1.0 + np.exp(-z)))
    assert np.allclose(s.sum(axis=1), 1.0)


def test_weighted_equals_duplicated_fullbatch():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(12, 3))
    y = ["a" if v > 0 else "b" for v in rng.normal(size=12)]
    w = np.ones(12)
    w[:5] = 3.0
    Xd = np.concatenate([X, X[:5], X[:5]])
    yd = y + y[:5] + y[:5]
    cfg = SvmConfig(c=1.0, epochs=25, learning_rate=0.2, mode="full-batch")
    a = train_svm(X, y, cfg, sample_weight=w)
    b = train_svm(Xd, yd, cfg)
    assert np.allclose(a.w, b.w, atol=1e-12)
    assert a.b == pytest.approx(b.b, abs=1e-12)


def test_per_sample_mode_is_seeded():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 4))
    y = ["a" if v > 0 else "b" for v in rng.normal(size=30)]
    cfg = SvmConfig(epochs=5, learning_rate=0.1, mode="per-sample")
    m1 = train_svm(X, y, cfg, seed=3)
    m2 = train_svm(X, y, cfg, seed=3)
    m3 = train_svm(X, y, cfg, seed=4)
    assert np.array_equal(m1.w, m2.w) and m1.b == m2.b
    assert not (np.array_equal(m1.w, m3.w) and m1.b == m3.b)


def test_rejects_non_binary_and_degenerate():
    X = np.eye(3)
    with pytest.raises(DataError, match="binary"):
        train_svm(X, ["a", "b", "c"])
    with pytest.warns(RuntimeWarning, match="single class"):
        m = train_svm(X, ["a", "a", "a"])
    assert isinstance(m, ConstantModel)


def test_serialization_roundtrip():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(10, 2))
    y = ["a" if v > 0 else "b" for v in rng.normal(size=10)]
    m = train_svm(X, y, SvmConfig(epochs=10, mode="full-batch"))
    back = SvmModel.from_dict(m.to_dict())
    assert np.array_equal(back.w, m.w) and back.b == m.b
    assert back.predict(X) == m.predict(X)
