import numpy as np
import pytest

from gab.core import DataError
from gab.learn import kernels
from gab.learn.common import (
    BoostConfig,
    ConstantModel,
    MlpConfig,
    SvmConfig,
    TrainConfig,
    model_from_dict,
)
from gab.ovo import (
    OvoModel,
    PackedLinearOvo,
    PackedMlpOvo,
    StubPair,
    decide_votes,
    ensemble_vote,
    pair_count,
    pair_seed,
    pair_structure,
    train_ovo,
    train_ovo_packed,
)

from oracles import ovo_vote_oracle

FAST = TrainConfig(
    svm=SvmConfig(c=1.0, epochs=30, learning_rate=0.1, mode="full-batch"),
    mlp=MlpConfig(hidden=3, epochs=15, learning_rate=0.5, l2=1e-4, batch=None),
    boost=BoostConfig(rounds=8),
)


def integer_dataset(rng, n=70, d=6, C=5, starved=False):
    """Small integer features with class-dependent means; optionally one
    class is cut to a single row so its pairs become stubs."""
    yk = rng.integers(C, size=n)
    if starved:
        keep = np.nonzero(yk == C - 1)[0][1:]
        mask = np.ones(n, bool)
        mask[keep] = False
        yk = yk[mask]
        n = yk.size
    X = rng.integers(0, 3, size=(n, d)).astype(float)
    for k in range(C):
        X[yk == k, k % d] += 2.0
    y = [f"act-{k}" for k in yk]
    return X, y


def test_pair_count_and_structure():
    assert [pair_count(c) for c in (1, 2, 3, 5)] == [0, 1, 3, 10]
    st = pair_structure(5)
    assert st["P"] == 10
    pairs = list(zip(st["i_idx"].tolist(), st["j_idx"].tolist()))
    assert pairs == [(i, j) for i in range(4) for j in range(i + 1, 5)]
    for g in range(4):
        lo = st["i_starts"][g]
        assert np.all(st["i_idx"][lo : lo + st["i_sizes"][g]] == g)
    jperm = st["j_idx"][st["perm_j"]]
    assert np.all(np.diff(jperm) >= 0)  # contiguous ascending j-groups


def test_pair_seed_is_stable_and_distinct():
    a = np.random.default_rng(pair_seed(3, 7)).integers(1 << 30, size=4)
    b = np.random.default_rng(pair_seed(3, 7)).integers(1 << 30, size=4)
    c = np.random.default_rng(pair_seed(3, 8)).integers(1 << 30, size=4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_decide_votes_matches_plain_scan():
    rng = np.random.default_rng(0)
    classes = tuple("abcde")
    for _ in range(200):
        votes = rng.integers(0, 4, size=(1, 5)).astype(float)
        conf = np.round(rng.random((1, 5)) * 4) / 4  # coarse grid forces ties
        labels, tie = decide_votes(votes, conf, classes)
        best = 0
        for k in range(1, 5):
            if votes[0, k] > votes[0, best]:
                best = k
            elif votes[0, k] == votes[0, best] and conf[0, k] > conf[0, best]:
                best = k
        assert labels[0] == classes[best]
        assert tie[0] == ((votes[0] == votes[0].max()).sum() > 1)


def test_vote_aggregation_matches_score_table_oracle():
    """Predictions must equal a plain double loop over the pair score table."""
    rng = np.random.default_rng(1)
    X, y = integer_dataset(rng, n=60, C=5)
    m = train_ovo(X, y, "svm", FAST, seed=4)
    pred = m.predict_ovo(X)
    C = len(m.classes)
    for r in range(0, 60, 7):
        table = np.zeros((C, C))
        for pair in m.pairs:
            s = pair["model"].predict_scores(X[r : r + 1, pair["cols"]])[0, 1]
            table[pair["i"], pair["j"]] = s
        best, votes, conf = ovo_vote_oracle(table)
        assert pred.labels[r] == m.classes[best]
        assert np.array_equal(pred.votes[r], votes)
        assert np.allclose(pred.confidence[r], conf)


def test_starved_class_pairs_become_stubs():
    rng = np.random.default_rng(2)
    X, y = integer_dataset(rng, n=80, C=4, starved=True)
    assert sum(1 for v in y if v == "act-3") == 1
    m = train_ovo(X, y, "svm", FAST, seed=0)
    stubs = [p for p in m.pairs if isinstance(p["model"], StubPair)]
    assert len(stubs) == 3  # every pair touching the starved class
    for p in stubs:
        assert m.classes[p["j"]] == "act-3"
        # one row against many: the stub's positive share is tiny
        assert p["model"].p_pos < 0.5
    # stub votes go to the heavy side, so the starved class never wins a pair
    pred = m.predict_ovo(X)
    k = m.classes.index("act-3")
    assert np.all(pred.votes[:, k] == 0.0)


def test_unseen_columns_are_invisible_to_a_pair():
    rng = np.random.default_rng(3)
    X, y = integer_dataset(rng, n=60, C=3)
    X[:, 5] = 0.0
    yk = np.array([int(v[-1]) for v in y])
    X[yk == 2, 5] = 1.0  # feature 5 only active for class 2
    m = train_ovo(X, y, "svm", FAST, seed=1)
    pair01 = next(p for p in m.pairs if (p["i"], p["j"]) == (0, 1))
    assert 5 not in pair01["cols"].tolist()
    Xt = X.copy()
    Xt[:, 5] += 9.0
    a = pair01["model"].predict_scores(X[:, pair01["cols"]])
    b = pair01["model"].predict_scores(Xt[:, pair01["cols"]])
    assert np.array_equal(a, b)


@pytest.mark.parametrize("trainer", ["svm", "boost", "mlp"])
def test_packed_engine_matches_reference(trainer):
    rng = np.random.default_rng(5)
    X, y = integer_dataset(rng, n=70, C=5, starved=True)
    ref = train_ovo(X, y, trainer, FAST, seed=9)
    fast = train_ovo_packed(X, y, trainer, FAST, seed=9)
    Xt, _ = integer_dataset(np.random.default_rng(6), n=40, C=5)
    a = ref.predict_ovo(Xt)
    b = fast.predict_ovo(Xt)
    assert a.labels == b.labels
    assert np.array_equal(a.votes, b.votes)
    assert np.allclose(a.confidence, b.confidence, rtol=1e-4, atol=1e-4)


def test_packed_boost_expands_count_features():
    """Counts above 1 force the indicator expansion; the packed model must
    still match the per-pair reference exactly."""
    rng = np.random.default_rng(7)
    X, y = integer_dataset(rng, n=60, C=4)
    assert X.max() > 1.0
    fast = train_ovo_packed(X, y, "boost", FAST, seed=2)
    assert isinstance(fast, PackedLinearOvo) and fast.expand is not None
    ref = train_ovo(X, y, "boost", FAST, seed=2)
    Xt = rng.integers(0, 5, size=(30, X.shape[1])).astype(float)
    a, b = ref.predict_ovo(Xt), fast.predict_ovo(Xt)
    assert a.labels == b.labels
    assert np.array_equal(a.votes, b.votes)


def test_packed_svm_is_one_weight_matrix():
    rng = np.random.default_rng(8)
    X, y = integer_dataset(rng, n=50, C=4)
    m = train_ovo_packed(X, y, "svm", FAST, seed=0)
    assert isinstance(m, PackedLinearOvo)
    assert m.W.shape == (X.shape[1], pair_count(4))
    # scores really are sigmoid margins of that matrix
    st = pair_structure(4)
    p = kernels.sigmoid(X @ m.W + m.b)
    pred = m.predict_ovo(X)
    votes = np.zeros((X.shape[0], 4))
    for q in range(st["P"]):
        win = p[:, q] > 0.5
        votes[:, st["j_idx"][q]] += win
        votes[:, st["i_idx"][q]] += ~win
    assert np.array_equal(pred.votes, votes)


def test_packed_engine_rejects_unsupported_modes():
    rng = np.random.default_rng(9)
    X, y = integer_dataset(rng, n=30, C=3)
    with pytest.raises(DataError, match="full-batch"):
        train_ovo_packed(X, y, "svm", TrainConfig(svm=SvmConfig(mode="per-sample")))
    with pytest.raises(DataError, match="batch"):
        train_ovo_packed(X, y, "mlp", TrainConfig(mlp=MlpConfig(batch=8)))
    with pytest.raises(DataError, match="integer"):
        train_ovo_packed(X + 0.5, y, "boost", FAST)
    with pytest.raises(DataError, match="trainer"):
        train_ovo(X, y, "forest", FAST)


def test_single_class_and_shape_errors():
    with pytest.warns(RuntimeWarning, match="single class"):
        m = train_ovo(np.eye(3), ["a", "a", "a"], "svm", FAST)
    assert isinstance(m, ConstantModel)
    with pytest.warns(RuntimeWarning, match="single class"):
        m = train_ovo_packed(np.eye(3), ["a", "a", "a"], "svm", FAST)
    assert isinstance(m, ConstantModel)
    with pytest.raises(DataError):
        train_ovo(np.zeros((0, 2)), [], "svm", FAST)


@pytest.mark.parametrize("trainer", ["svm", "boost", "mlp"])
def test_reference_serialization_roundtrip(trainer):
    rng = np.random.default_rng(10)
    X, y = integer_dataset(rng, n=50, C=4, starved=True)
    m = train_ovo(X, y, trainer, FAST, seed=3)
    back = model_from_dict(m.to_dict())
    assert isinstance(back, OvoModel)
    Xt = rng.integers(0, 4, size=(20, X.shape[1])).astype(float)
    assert back.predict(Xt) == m.predict(Xt)
    assert np.array_equal(back.predict_ovo(Xt).votes, m.predict_ovo(Xt).votes)


@pytest.mark.parametrize("trainer", ["svm", "boost", "mlp"])
def test_packed_serialization_roundtrip(trainer):
    rng = np.random.default_rng(11)
    X, y = integer_dataset(rng, n=50, C=4, starved=True)
    m = train_ovo_packed(X, y, trainer, FAST, seed=3)
    back = model_from_dict(m.to_dict())
    assert type(back) is type(m)
    Xt = rng.integers(0, 4, size=(20, X.shape[1])).astype(float)
    a, b = m.predict_ovo(Xt), back.predict_ovo(Xt)
    assert a.labels == b.labels
    assert np.array_equal(a.votes, b.votes)
    assert np.allclose(a.confidence, b.confidence)
    if isinstance(m, PackedLinearOvo) and m.expand is not None:
        assert np.array_equal(back.expand[0], m.expand[0])


def test_vote_fraction_scores():
    rng = np.random.default_rng(12)
    X, y = integer_dataset(rng, n=40, C=4)
    m = train_ovo(X, y, "svm", FAST)
    s = m.predict_scores(X)
    pred = m.predict_ovo(X)
    assert np.allclose(s, pred.votes / 3.0)


def test_ensemble_vote_majorities_and_ties():
    labels = [["a", "a", "b"], ["a", "b", "c"], ["b", "b", "c"]]
    conf = [np.array([0.9, 0.2, 0.8]), np.array([0.1, 0.9, 0.4]), np.array([0.5, 0.8, 0.3])]
    out = ensemble_vote(labels, conf)
    # row 0: a has 2 votes; row 1: b has 2; row 2: c has 2
    assert out == ["a", "b", "c"]
    # three-way tie resolved by mean confidence
    out = ensemble_vote(
        [["a"], ["b"], ["c"]], [np.array([0.2]), np.array([0.9]), np.array([0.5])]
    )
    assert out == ["b"]
    # equal confidence: lexicographically smallest label
    out = ensemble_vote(
        [["z"], ["b"], ["m"]], [np.array([0.5]), np.array([0.5]), np.array([0.5])]
    )
    assert out == ["b"]
    with pytest.raises(DataError, match="at least one"):
        ensemble_vote([], [])
    with pytest.raises(DataError, match="row count"):
        ensemble_vote([["a"], ["a", "b"]], [np.zeros(1), np.zeros(2)])
