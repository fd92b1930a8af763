import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gab.bench import (
    CellResult,
    Grid,
    GridColumn,
    GridResult,
    GridRow,
    GridSection,
    accuracy,
    apply_sequence_filters,
    builtin_grid,
    dedupe_training,
    derive_seed,
    fit_classifier,
    grid_from_dict,
    load_results,
    per_class_accuracy,
    predict_with_confidence,
    run_grid,
    save_results,
    stratified_two_fold,
    thread_count,
)
from gab.core import DataError, InvalidSpec, LengthMismatch
from gab.learn.common import ConstantModel, SvmConfig, TrainConfig
from gab.ovo import OvoModel, PackedLinearOvo, PackedMlpOvo
from gab.learn.forest import ForestModel


def small_grid(seed=3):
    rows = (
        GridRow("forest", "forest", {"forest": {"n_trees": 5}}),
        GridRow("svm", "svm-ovo", {"svm": {"epochs": 15, "mode": "full-batch"}}),
        GridRow("both", "ensemble", members=("forest", "svm")),
    )
    return Grid(
        name="toy",
        seed=seed,
        config={"svm": {"learning_rate": 0.1}},
        sections=(
            GridSection(
                name="main",
                target="action",
                columns=(
                    GridColumn("objects", subset=("object",)),
                    GridColumn("grasps", subset=("grasp_fine",)),
                ),
                rows=rows,
            ),
            GridSection(
                name="sequences",
                target="action",
                columns=(GridColumn("seq", level="sequence", variant="ordinal-object"),),
                rows=(GridRow("forest", "forest", {"forest": {"n_trees": 5}}),),
                min_instances_per_sequence=2,
            ),
        ),
    )


def test_derive_seed_stable_and_path_sensitive():
    a = derive_seed(7, "sect", "col", "row")
    assert a == derive_seed(7, "sect", "col", "row")
    assert a != derive_seed(8, "sect", "col", "row")
    assert a != derive_seed(7, "sect", "col", "row2")
    assert derive_seed(7, "ab", "c") != derive_seed(7, "a", "bc")
    assert 0 <= a < (1 << 63)


def test_two_fold_partitions_and_balances():
    labels = ["a"] * 7 + ["b"] * 4 + ["c"] * 1
    fa, fb = stratified_two_fold(labels, seed=0)
    assert sorted(fa.tolist() + fb.tolist()) == list(range(12))
    for lab in "abc":
        na = sum(1 for k in fa if labels[k] == lab)
        nb = sum(1 for k in fb if labels[k] == lab)
        assert abs(na - nb) <= 1
        assert na >= nb  # odd remainders and singletons go to fold a
    fa2, fb2 = stratified_two_fold(labels, seed=0)
    assert np.array_equal(fa, fa2) and np.array_equal(fb, fb2)
    fa3, _ = stratified_two_fold(["a"] * 50 + ["b"] * 50, seed=1)
    fa4, _ = stratified_two_fold(["a"] * 50 + ["b"] * 50, seed=2)
    assert not np.array_equal(fa3, fa4)
    with pytest.raises(DataError):
        stratified_two_fold([], 0)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=60),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_two_fold_property(labels, seed):
    fa, fb = stratified_two_fold(labels, seed)
    assert sorted(fa.tolist() + fb.tolist()) == list(range(len(labels)))
    for lab in set(labels):
        na = sum(1 for k in fa if labels[k] == lab)
        nb = sum(1 for k in fb if labels[k] == lab)
        assert abs(na - nb) <= 1


def test_accuracy_and_per_class():
    assert accuracy(["a", "b", "c"], ["a", "x", "c"]) == pytest.approx(2 / 3)
    assert per_class_accuracy(["a", "a", "b"], ["a", "x", "b"]) == {
        "a": (1, 2),
        "b": (1, 1),
    }
    with pytest.raises(LengthMismatch):
        accuracy(["a"], [])
    with pytest.raises(DataError):
        accuracy([], [])


def test_dedupe_training_is_exact():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 2, size=(50, 4)).astype(float)
    y = [f"c{k}" for k in rng.integers(3, size=50)]
    Xu, yu, w = dedupe_training(X, y)
    assert w.sum() == 50
    assert len(yu) == Xu.shape[0] == w.size
    # expanding the uniques by weight reproduces the original multiset
    want = sorted((tuple(r), lab) for r, lab in zip(X, y))
    got = sorted(
        (tuple(r), lab)
        for r, lab, k in zip(Xu, yu, w.astype(int))
        for _ in range(k)
    )
    assert got == want
    # same row with different labels stays distinct
    Xc = np.zeros((2, 2))
    Xu, yu, w = dedupe_training(Xc, ["a", "b"])
    assert len(yu) == 2 and sorted(yu) == ["a", "b"]


def test_fit_classifier_engine_selection():
    rng = np.random.default_rng(1)
    X = rng.integers(0, 2, size=(40, 5)).astype(float)
    y = [f"c{k}" for k in rng.integers(3, size=40)]
    full = TrainConfig(svm=SvmConfig(epochs=10, mode="full-batch"))
    assert isinstance(fit_classifier(X, y, "svm-ovo", full), PackedLinearOvo)
    per = TrainConfig(svm=SvmConfig(epochs=10, mode="per-sample"))
    assert isinstance(fit_classifier(X, y, "svm-ovo", per), OvoModel)
    assert isinstance(fit_classifier(X, y, "forest", TrainConfig()), ForestModel)
    assert isinstance(
        fit_classifier(X + 0.5, y, "boost-ovo", TrainConfig()), OvoModel
    )  # non-integer features force the reference engine
    assert isinstance(fit_classifier(X, y, "boost-ovo", TrainConfig()), PackedLinearOvo)
    forced = fit_classifier(X, y, "svm-ovo", full, engine="reference")
    assert isinstance(forced, OvoModel)
    with pytest.raises(DataError, match="full-batch"):
        fit_classifier(X, y, "svm-ovo", per, engine="packed")
    with pytest.raises(DataError, match="kind"):
        fit_classifier(X, y, "stump", TrainConfig())
    with pytest.raises(DataError, match="engine"):
        fit_classifier(X, y, "svm-ovo", full, engine="warp")


def test_mlp_binary_auto_packs_and_matches_reference():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 2, size=(60, 6)).astype(float)
    y = [f"c{k}" for k in rng.integers(3, size=60)]
    cfg = TrainConfig.from_dict({"mlp": {"hidden": 3, "epochs": 10}})
    m = fit_classifier(X, y, "mlp-binary-ovo", cfg, seed=5)
    assert isinstance(m, PackedMlpOvo)
    r = fit_classifier(X, y, "mlp-binary-ovo", cfg, seed=5, engine="reference")
    assert m.predict(X) == r.predict(X)


def test_predict_with_confidence_dedupes_consistently():
    rng = np.random.default_rng(3)
    X = rng.integers(0, 2, size=(30, 4)).astype(float)
    y = [f"c{k}" for k in rng.integers(2, size=30)]
    cfg = TrainConfig(svm=SvmConfig(epochs=10, mode="full-batch"))
    m = fit_classifier(X, y, "svm-ovo", cfg)
    Xt = np.vstack([X[:5], X[:5], X[5:9]])  # deliberate duplicates
    labels, conf = predict_with_confidence(m, Xt)
    assert labels[:5] == labels[5:10]
    assert np.array_equal(conf[:5], conf[5:10])
    assert labels == m.predict(Xt)
    pred = m.predict_ovo(Xt)
    k = [m.classes.index(v) for v in labels]
    want = pred.votes[np.arange(14), k] / (len(m.classes) - 1)
    assert np.allclose(conf, want)
    # score-based models report the winning score
    f = fit_classifier(X, y, "forest", TrainConfig.from_dict({"forest": {"n_trees": 5}}))
    labels, conf = predict_with_confidence(f, Xt)
    s = f.predict_scores(Xt)
    assert np.allclose(conf, s.max(axis=1))
    labels, conf = predict_with_confidence(ConstantModel("z"), Xt)
    assert labels == ["z"] * 14 and np.all(conf == 1.0)


def test_apply_sequence_filters(small_dataset):
    seqs, kept = apply_sequence_filters(small_dataset, 2, None)
    assert all(len(s.instances) >= 2 for s in seqs)
    assert len(kept) == sum(len(s.instances) for s in seqs)
    seqs2, _ = apply_sequence_filters(small_dataset, 2, 2)
    per_action: dict[str, int] = {}
    for s in seqs2:
        per_action[s.action_label] = per_action.get(s.action_label, 0) + 1
    assert all(v >= 2 for v in per_action.values())
    with pytest.raises(DataError, match="removed every sequence"):
        apply_sequence_filters(small_dataset, 10_000, None)


def test_validate_grid_rejections():
    ok = small_grid()
    with pytest.raises(InvalidSpec, match="no sections"):
        grid_from_dict({"format": "gab-grid/1", "sections": []})
    bad_cases = [
        # duplicate section name
        Grid("g", 0, {}, (ok.sections[0], ok.sections[0])),
        # unknown target
        Grid("g", 0, {}, (GridSection("s", target="speed", columns=ok.sections[0].columns, rows=ok.sections[0].rows),)),
        # no rows
        Grid("g", 0, {}, (GridSection("s", columns=ok.sections[0].columns, rows=()),)),
        # bad subset attribute
        Grid("g", 0, {}, (GridSection("s", columns=(GridColumn("c", subset=("sharpness",)),), rows=ok.sections[0].rows),)),
        # sequence column must predict actions
        Grid("g", 0, {}, (GridSection("s", target="force", columns=(GridColumn("c", level="sequence"),), rows=ok.sections[0].rows),)),
        # unknown level
        Grid("g", 0, {}, (GridSection("s", columns=(GridColumn("c", level="video"),), rows=ok.sections[0].rows),)),
        # unknown classifier kind
        Grid("g", 0, {}, (GridSection("s", columns=ok.sections[0].columns, rows=(GridRow("r", "stump"),)),)),
        # ensemble member must be an earlier row
        Grid("g", 0, {}, (GridSection("s", columns=ok.sections[0].columns, rows=(GridRow("e", "ensemble", members=("ghost",)),)),)),
        # filter limits must be >= 1
        Grid("g", 0, {}, (GridSection("s", columns=ok.sections[0].columns, rows=ok.sections[0].rows, min_sequences_per_action=0),)),
    ]
    for grid in bad_cases:
        with pytest.raises(InvalidSpec):
            run_grid([], grid)


def test_grid_from_dict_format_gate():
    with pytest.raises(InvalidSpec, match="format"):
        grid_from_dict({"sections": []})
    with pytest.raises(InvalidSpec, match="malformed"):
        grid_from_dict({"format": "gab-grid/1", "sections": [{"columns": []}]})


def test_builtin_grid_loads_and_validates():
    g = builtin_grid()
    assert g.sections
    names = [s.name for s in g.sections]
    assert len(names) == len(set(names))


def test_run_grid_end_to_end(small_dataset, taxonomy):
    grid = small_grid()
    res = run_grid(small_dataset, grid, taxonomy=taxonomy)
    assert not res.failures
    assert len(res.cells) == 7  # 2 columns x 3 rows + 1 sequence cell
    for c in res.cells:
        assert 0.0 <= c.fold_ab <= 1.0 and 0.0 <= c.fold_ba <= 1.0
        assert c.accuracy == pytest.approx((c.fold_ab + c.fold_ba) / 2)
        assert 0.0 <= c.pooled <= 1.0
        assert c.classes > 1
    # grid evaluation is deterministic
    res2 = run_grid(small_dataset, grid, taxonomy=taxonomy)
    assert [c.to_dict() for c in res2.cells] == [c.to_dict() for c in res.cells]
    # restricting to one section keeps only its cells
    only = run_grid(small_dataset, grid, sections=["sequences"], taxonomy=taxonomy)
    assert {c.section for c in only.cells} == {"sequences"}
    with pytest.raises(DataError, match="unknown sections"):
        run_grid(small_dataset, grid, sections=["mystery"])


def test_run_grid_parallel_matches_serial(small_dataset, taxonomy):
    grid = small_grid()
    serial = run_grid(small_dataset, grid, threads=1, taxonomy=taxonomy)
    parallel = run_grid(small_dataset, grid, threads=2, taxonomy=taxonomy)
    key = lambda c: (c["section"], c["column"], c["row"])
    a = sorted((c.to_dict() for c in serial.cells), key=key)
    b = sorted((c.to_dict() for c in parallel.cells), key=key)
    assert a == b


def test_run_grid_records_failures(small_dataset, taxonomy):
    sect = GridSection(
        name="empty-view",
        columns=(GridColumn("objects", subset=("object",)),),
        rows=(
            GridRow("forest", "forest", {"forest": {"n_trees": 3}}),
            GridRow("team", "ensemble", members=("forest",)),
        ),
        exclude_objects=tuple(sorted({i.object for i in small_dataset})),
    )
    res = run_grid(small_dataset, Grid("g", 0, {}, (sect,)), taxonomy=taxonomy)
    assert not res.cells
    assert len(res.failures) == 2
    assert all(f["section"] == "empty-view" and f["error"] for f in res.failures)


def test_thread_count_sources(monkeypatch):
    assert thread_count(4) == 4
    assert thread_count(0) == 1
    monkeypatch.setenv("GAB_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("GAB_THREADS", "soon")
    assert thread_count() == 1
    monkeypatch.delenv("GAB_THREADS")
    assert thread_count() == 1


def test_results_roundtrip(tmp_path, small_dataset, taxonomy):
    grid = small_grid()
    res = run_grid(small_dataset, grid, taxonomy=taxonomy)
    res.failures.append({"section": "s", "column": "c", "row": "r", "error": "DataError: nope"})
    p = tmp_path / "results.csv"
    save_results(res, p)
    back = load_results(p)
    assert back.name == res.name and back.seed == res.seed
    assert [c.to_dict() for c in back.cells] == [c.to_dict() for c in res.cells]
    assert back.failures == res.failures
    # byte-identical on rewrite
    p2 = tmp_path / "again.csv"
    save_results(back, p2)
    assert p.read_bytes() == p2.read_bytes()
    with pytest.raises(DataError, match="not a results file"):
        load_results(__file__)


def test_load_results_header_and_row_checks(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("grid,g,0,,,,,,,,,\nwrong,header\n")
    with pytest.raises(DataError, match="unexpected results header"):
        load_results(p)
    res = GridResult("g", 0, [CellResult("s", "c", "r", "forest", "action", 4, 2, 0.5, 0.5, 0.5, 0.5)], [])
    good = tmp_path / "good.csv"
    save_results(res, good)
    text = good.read_text().rstrip("\n") + "\nshort,row\n"
    bad = tmp_path / "ragged.csv"
    bad.write_text(text)
    with pytest.raises(DataError, match="ragged"):
        load_results(bad)
