"""Benchmark harness: stratified two-fold evaluation over a grid of cells.

A grid file declares sections; each section fixes a data view (object
exclusions, sequence-level filters, a prediction target) and spans a table
of columns (feature encodings) by rows (classifiers, possibly an ensemble
of earlier rows). Every cell is scored by two-fold cross-validation: the
data is split once per (data view, grid seed), each fold serves once as
the training side, and the cell reports both orientations, their mean, and
the pooled accuracy over all rows.

Determinism: the split depends only on the data view and the grid seed;
per-cell training seeds are derived by hashing the cell's coordinates, so
results do not depend on grid ordering or on how work is distributed
across processes. Duplicate feature rows are collapsed to weighted uniques
before training (the trainers' objectives are weight-exact) and before
prediction (scored once, scattered back), which is what makes the one-hot
workloads tractable.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DataError,
    InvalidSpec,
    Instance,
    LengthMismatch,
    Taxonomy,
    builtin_taxonomy,
)
from .encode import (
    ATTRIBUTES,
    SEQUENCE_VARIANTS,
    TARGETS,
    build_vocab,
    encode_matrix,
    encode_sequence_matrix,
    group_sequences,
    object_vocab,
    parse_subset,
)
from .ingest import exclude_objects
from .learn import (
    CLASSIFIER_KINDS,
    ConstantModel,
    TrainConfig,
    train_forest,
    train_mlp,
    validate_config,
)
from .learn.boost import stump_cuts
from .ovo import ensemble_vote, train_ovo, train_ovo_packed

GRID_FORMAT = "gab-grid/1"
OVO_TRAINER_OF = {"svm-ovo": "svm", "boost-ovo": "boost", "mlp-binary-ovo": "mlp"}


def derive_seed(base: int, *parts: str) -> int:
    """Mix a base seed with a coordinate path; stable across runs and
    independent of evaluation order."""
    h = hashlib.sha256("/".join(parts).encode("utf-8")).digest()
    return (int(base) ^ int.from_bytes(h[:8], "big")) & ((1 << 63) - 1)


def stratified_two_fold(labels, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into two folds, stratified by label.

    Per label (in sorted order, one shared rng) the indices are shuffled;
    the first ceil(n/2) go to fold a. Singleton labels land in fold a.
    """
    if len(labels) == 0:
        raise DataError("nothing to split")
    rng = np.random.default_rng(seed)
    groups: dict[str, list[int]] = {}
    for k, lab in enumerate(labels):
        groups.setdefault(lab, []).append(k)
    fold_a: list[int] = []
    fold_b: list[int] = []
    for lab in sorted(groups):
        idx = np.array(groups[lab], np.int64)
        idx = idx[rng.permutation(len(idx))]
        half = (len(idx) + 1) // 2
        fold_a.extend(idx[:half].tolist())
        fold_b.extend(idx[half:].tolist())
    return np.array(sorted(fold_a), np.int64), np.array(sorted(fold_b), np.int64)


def accuracy(y_true, y_pred) -> float:
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    if len(y_true) == 0:
        raise DataError("empty evaluation")
    return sum(a == b for a, b in zip(y_true, y_pred)) / len(y_true)


def per_class_accuracy(y_true, y_pred) -> dict[str, tuple[int, int]]:
    """Per label: (correct, total) among rows whose true label it is."""
    if len(y_true) != len(y_pred):
        raise LengthMismatch(f"{len(y_true)} labels vs {len(y_pred)} predictions")
    out: dict[str, list[int]] = {}
    for t, p in zip(y_true, y_pred):
        c = out.setdefault(t, [0, 0])
        c[0] += t == p
        c[1] += 1
    return {k: (v[0], v[1]) for k, v in sorted(out.items())}


def apply_sequence_filters(
    instances: list[Instance],
    min_instances_per_sequence: int | None,
    min_sequences_per_action: int | None,
):
    """Keep sequences with enough instances, then actions with enough such
    sequences; returns (sequences, their instances in sequence order)."""
    seqs = group_sequences(instances, min_instances=min_instances_per_sequence or 1)
    if min_sequences_per_action and min_sequences_per_action > 1:
        per_action: dict[str, int] = {}
        for s in seqs:
            per_action[s.action_label] = per_action.get(s.action_label, 0) + 1
        seqs = [s for s in seqs if per_action[s.action_label] >= min_sequences_per_action]
    kept = [i for s in seqs for i in s.instances]
    if not seqs:
        raise DataError("sequence filters removed every sequence")
    return seqs, kept


# ---------------------------------------------------------- fit and predict


def dedupe_training(X: np.ndarray, y) -> tuple[np.ndarray, list[str], np.ndarray]:
    """Collapse identical (row, label) pairs to one row with an integer
    weight. Exact for the weighted full-batch trainers and for the forest's
    multinomial bootstrap."""
    classes = sorted(set(y))
    lut = {c: k for k, c in enumerate(classes)}
    yi = np.fromiter((lut[v] for v in y), float, count=len(y))
    key = np.concatenate([X, yi[:, None]], axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    Xu = np.ascontiguousarray(uniq[:, :-1])
    yu = [classes[int(k)] for k in uniq[:, -1]]
    return Xu, yu, counts.astype(float)


def fit_classifier(
    X: np.ndarray,
    y,
    kind: str,
    cfg: TrainConfig | None = None,
    seed: int = 0,
    sample_weight=None,
    engine: str = "auto",
):
    """Train any supported classifier kind on a labeled matrix.

    One-vs-one kinds pick the packed engine automatically when the
    configuration allows it (full-batch trainers; small-integer features
    for boosting); `engine` can force "packed" or "reference".
    """
    cfg = cfg or TrainConfig()
    validate_config(cfg)
    if kind == "forest":
        return train_forest(X, y, cfg.forest, seed, sample_weight=sample_weight)
    if kind == "mlp":
        return train_mlp(X, y, cfg.mlp, seed, sample_weight=sample_weight)
    trainer = OVO_TRAINER_OF.get(kind)
    if trainer is None:
        raise DataError(f"unknown classifier kind {kind!r}")
    if engine == "auto":
        ok = (
            (trainer == "svm" and cfg.svm.mode == "full-batch")
            or (trainer == "mlp" and cfg.mlp.batch is None)
            or (trainer == "boost" and stump_cuts(np.asarray(X, float)) is not None)
        )
        engine = "packed" if ok else "reference"
    if engine == "packed":
        return train_ovo_packed(X, y, trainer, cfg, seed, sample_weight=sample_weight)
    if engine == "reference":
        return train_ovo(X, y, trainer, cfg, seed, sample_weight=sample_weight)
    raise DataError(f"unknown engine {engine!r}")


def _predict_unique(model, Xu: np.ndarray) -> tuple[list[str], np.ndarray]:
    n = Xu.shape[0]
    if isinstance(model, ConstantModel):
        return [model.classes[0]] * n, np.ones(n)
    if hasattr(model, "predict_ovo"):
        pred = model.predict_ovo(Xu)
        lut = {c: k for k, c in enumerate(model.classes)}
        idx = np.fromiter((lut[v] for v in pred.labels), np.int64, count=n)
        conf = pred.votes[np.arange(n), idx] / max(1, len(model.classes) - 1)
        return pred.labels, conf
    scores = model.predict_scores(Xu)
    k = scores.argmax(axis=1)
    labels = [model.classes[v] for v in k]
    return labels, scores[np.arange(n), k]


def predict_with_confidence(model, X: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Predicted labels plus a per-row confidence: the winner's vote
    fraction for one-vs-one models, the winning score otherwise. Duplicate
    rows are scored once."""
    Xu, inv = np.unique(np.asarray(X, float), axis=0, return_inverse=True)
    labels_u, conf_u = _predict_unique(model, Xu)
    return [labels_u[k] for k in inv], conf_u[inv]


# ------------------------------------------------------------------- grids


@dataclass(frozen=True)
class GridColumn:
    name: str
    level: str = "instance"            # "instance" | "sequence"
    subset: tuple[str, ...] = ()       # instance level: encoded attributes
    variant: str = "onehot-object"     # sequence level: object encoding
    target: str | None = None          # overrides the section target


@dataclass(frozen=True)
class GridRow:
    name: str
    kind: str                          # classifier kind or "ensemble"
    config: dict = field(default_factory=dict)
    members: tuple[str, ...] = ()      # ensemble rows: earlier row names


@dataclass(frozen=True)
class GridSection:
    name: str
    target: str = "action"
    columns: tuple[GridColumn, ...] = ()
    rows: tuple[GridRow, ...] = ()
    exclude_objects: tuple[str, ...] = ()
    min_instances_per_sequence: int | None = None
    min_sequences_per_action: int | None = None


@dataclass(frozen=True)
class Grid:
    name: str
    seed: int
    config: dict = field(default_factory=dict)
    sections: tuple[GridSection, ...] = ()


def _merge_config(base: dict, override: dict) -> TrainConfig:
    merged: dict = {k: dict(v) for k, v in base.items()}
    for sect, vals in override.items():
        if not isinstance(vals, dict):
            raise InvalidSpec(f"config section {sect!r} must be a mapping")
        merged.setdefault(sect, {}).update(vals)
    return TrainConfig.from_dict(merged)


def validate_grid(grid: Grid) -> None:
    if not grid.sections:
        raise InvalidSpec("grid has no sections")
    _merge_config(grid.config, {})
    seen_sections = set()
    for sect in grid.sections:
        if not sect.name or sect.name in seen_sections:
            raise InvalidSpec(f"bad or duplicate section name {sect.name!r}")
        seen_sections.add(sect.name)
        if sect.target not in TARGETS:
            raise InvalidSpec(f"{sect.name}: unknown target {sect.target!r}")
        for lim in (sect.min_instances_per_sequence, sect.min_sequences_per_action):
            if lim is not None and lim < 1:
                raise InvalidSpec(f"{sect.name}: filter limits must be >= 1")
        if not sect.columns or not sect.rows:
            raise InvalidSpec(f"{sect.name}: needs columns and rows")
        seen_cols = set()
        for col in sect.columns:
            if not col.name or col.name in seen_cols:
                raise InvalidSpec(f"{sect.name}: bad or duplicate column {col.name!r}")
            seen_cols.add(col.name)
            target = col.target or sect.target
            if target not in TARGETS:
                raise InvalidSpec(f"{sect.name}/{col.name}: unknown target {target!r}")
            if col.level == "instance":
                try:
                    parse_subset(col.subset)
                except DataError as e:
                    raise InvalidSpec(f"{sect.name}/{col.name}: {e}") from None
            elif col.level == "sequence":
                if col.variant not in SEQUENCE_VARIANTS:
                    raise InvalidSpec(
                        f"{sect.name}/{col.name}: unknown variant {col.variant!r}"
                    )
                if target != "action":
                    raise InvalidSpec(
                        f"{sect.name}/{col.name}: sequence columns predict actions only"
                    )
            else:
                raise InvalidSpec(f"{sect.name}/{col.name}: unknown level {col.level!r}")
        seen_rows: dict[str, str] = {}
        for row in sect.rows:
            if not row.name or row.name in seen_rows:
                raise InvalidSpec(f"{sect.name}: bad or duplicate row {row.name!r}")
            if row.kind == "ensemble":
                if not row.members:
                    raise InvalidSpec(f"{sect.name}/{row.name}: ensemble needs members")
                for m in row.members:
                    if seen_rows.get(m) in (None, "ensemble"):
                        raise InvalidSpec(
                            f"{sect.name}/{row.name}: member {m!r} must be an earlier classifier row"
                        )
            elif row.kind not in CLASSIFIER_KINDS:
                raise InvalidSpec(f"{sect.name}/{row.name}: unknown kind {row.kind!r}")
            else:
                _merge_config(grid.config, row.config)
            seen_rows[row.name] = row.kind


def grid_from_dict(doc: dict) -> Grid:
    if doc.get("format") != GRID_FORMAT:
        raise InvalidSpec(f"expected format {GRID_FORMAT!r}")
    try:
        sections = []
        for s in doc["sections"]:
            columns = tuple(
                GridColumn(
                    name=c["name"],
                    level=c.get("level", "instance"),
                    subset=tuple(c.get("subset", ())),
                    variant=c.get("variant", "onehot-object"),
                    target=c.get("target"),
                )
                for c in s["columns"]
            )
            rows = tuple(
                GridRow(
                    name=r["name"],
                    kind=r["kind"],
                    config=r.get("config", {}),
                    members=tuple(r.get("members", ())),
                )
                for r in s["rows"]
            )
            sections.append(
                GridSection(
                    name=s["name"],
                    target=s.get("target", "action"),
                    columns=columns,
                    rows=rows,
                    exclude_objects=tuple(s.get("exclude_objects", ())),
                    min_instances_per_sequence=s.get("min_instances_per_sequence"),
                    min_sequences_per_action=s.get("min_sequences_per_action"),
                )
            )
    except (KeyError, TypeError) as e:
        raise InvalidSpec(f"malformed grid: {e}") from None
    grid = Grid(
        name=doc.get("name", "grid"),
        seed=int(doc.get("seed", 0)),
        config=doc.get("config", {}),
        sections=tuple(sections),
    )
    validate_grid(grid)
    return grid


def load_grid(path) -> Grid:
    with open(path, encoding="utf-8") as fh:
        return grid_from_dict(json.load(fh))


def builtin_grid() -> Grid:
    from importlib.resources import files

    doc = json.loads(files("gab").joinpath("data/benchmark_grid.json").read_text("utf-8"))
    return grid_from_dict(doc)


# ------------------------------------------------------------------ results


@dataclass
class CellResult:
    section: str
    column: str
    row: str
    kind: str
    target: str
    rows: int            # dataset rows in this cell's view
    classes: int
    fold_ab: float       # trained on fold a, tested on fold b
    fold_ba: float
    accuracy: float      # mean of the two orientations
    pooled: float        # correct over all rows, both orientations
    seconds: float = 0.0  # in-memory only; never serialized

    def to_dict(self) -> dict:
        return {
            "section": self.section,
            "column": self.column,
            "row": self.row,
            "kind": self.kind,
            "target": self.target,
            "rows": self.rows,
            "classes": self.classes,
            "fold_ab": self.fold_ab,
            "fold_ba": self.fold_ba,
            "accuracy": self.accuracy,
            "pooled": self.pooled,
        }


@dataclass
class GridResult:
    name: str
    seed: int
    cells: list[CellResult]
    failures: list[dict]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "cells": [c.to_dict() for c in self.cells],
            "failures": list(self.failures),
        }


RESULT_COLUMNS = (
    "section", "column", "row", "kind", "target",
    "rows", "classes", "fold_ab", "fold_ba", "accuracy", "pooled", "error",
)


def save_results(result: GridResult, path) -> None:
    """CSV, one line per cell; reruns of the same grid are byte-identical
    (timings are deliberately not written)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("grid", result.name, str(result.seed)) + ("",) * (len(RESULT_COLUMNS) - 3))
        w.writerow(RESULT_COLUMNS)
        for c in result.cells:
            w.writerow(
                (
                    c.section, c.column, c.row, c.kind, c.target,
                    str(c.rows), str(c.classes),
                    repr(c.fold_ab), repr(c.fold_ba), repr(c.accuracy), repr(c.pooled),
                    "",
                )
            )
        for f in result.failures:
            w.writerow(
                (f["section"], f["column"], f["row"], "", "", "", "", "", "", "", "", f["error"])
            )


def load_results(path) -> GridResult:
    with open(path, encoding="utf-8", newline="") as fh:
        r = csv.reader(fh)
        head = next(r, None)
        if not head or head[0] != "grid":
            raise DataError(f"{path}: not a results file")
        name, seed = head[1], int(head[2] or 0)
        cols = next(r, None)
        if tuple(cols or ()) != RESULT_COLUMNS:
            raise DataError(f"{path}: unexpected results header")
        cells, failures = [], []
        for line in r:
            if len(line) != len(RESULT_COLUMNS):
                raise DataError(f"{path}: ragged results row")
            if line[11]:
                failures.append({"section": line[0], "column": line[1], "row": line[2], "error": line[11]})
                continue
            cells.append(
                CellResult(
                    section=line[0], column=line[1], row=line[2], kind=line[3],
                    target=line[4], rows=int(line[5]), classes=int(line[6]),
                    fold_ab=float(line[7]), fold_ba=float(line[8]),
                    accuracy=float(line[9]), pooled=float(line[10]),
                )
            )
    return GridResult(name, seed, cells, failures)


# ------------------------------------------------------------------ runner


def _prepare_view(instances: list[Instance], sect: GridSection, col: GridColumn, taxonomy: Taxonomy):
    """Apply the section's data view, encode one column; returns
    (X, y, stratify_labels, n_rows)."""
    insts = list(instances)
    if sect.exclude_objects:
        insts = exclude_objects(insts, list(sect.exclude_objects))
    seqs = None
    if sect.min_instances_per_sequence or sect.min_sequences_per_action:
        seqs, insts = apply_sequence_filters(
            insts, sect.min_instances_per_sequence, sect.min_sequences_per_action
        )
    if not insts:
        raise DataError(f"{sect.name}: data view is empty")
    target = col.target or sect.target
    if col.level == "sequence":
        if seqs is None:
            seqs = group_sequences(insts, min_instances=1)
        X, y = encode_sequence_matrix(seqs, taxonomy, object_vocab(insts), col.variant)
        strat = y
    else:
        vocab = build_vocab(insts, col.subset, taxonomy)
        X, y = encode_matrix(insts, vocab, target)
        strat = [i.action_label for i in insts]
    return X, y, strat, X.shape[0]


def _view_key(sect: GridSection, col: GridColumn) -> str:
    return json.dumps(
        {
            "exclude": sorted(sect.exclude_objects),
            "mi": sect.min_instances_per_sequence,
            "ms": sect.min_sequences_per_action,
            "level": col.level,
        },
        sort_keys=True,
    )


def _run_group(instances: list[Instance], grid: Grid, si: int, ci: int, taxonomy: Taxonomy):
    """Evaluate every row of one (section, column) cell group."""
    sect = grid.sections[si]
    col = sect.columns[ci]
    cells: list[CellResult] = []
    failures: list[dict] = []
    try:
        X, y, strat, n_rows = _prepare_view(instances, sect, col, taxonomy)
    except Exception as e:  # the whole group shares this view
        for row in sect.rows:
            failures.append(
                {"section": sect.name, "column": col.name, "row": row.name,
                 "error": f"{type(e).__name__}: {e}"}
            )
        return cells, failures
    target = col.target or sect.target
    n_classes = len(set(y))
    fold_a, fold_b = stratified_two_fold(strat, derive_seed(grid.seed, "split", _view_key(sect, col)))
    orientations = (("ab", fold_a, fold_b), ("ba", fold_b, fold_a))
    y_arr = np.array(y, object)
    member_preds: dict[str, list[tuple[list[str], np.ndarray]]] = {}
    for row in sect.rows:
        t0 = time.perf_counter()
        try:
            per_orient: list[tuple[list[str], np.ndarray]] = []
            correct = [0, 0]
            if row.kind == "ensemble":
                missing = [m for m in row.members if m not in member_preds]
                if missing:
                    raise DataError(f"ensemble members failed: {', '.join(missing)}")
                for o, (_, _, test) in enumerate(orientations):
                    labels = ensemble_vote(
                        [member_preds[m][o][0] for m in row.members],
                        [member_preds[m][o][1] for m in row.members],
                    )
                    conf = np.zeros(len(labels))
                    per_orient.append((labels, conf))
                    correct[o] = sum(a == b for a, b in zip(labels, y_arr[test]))
            else:
                cfg = _merge_config(grid.config, row.config)
                for o, (oname, train, test) in enumerate(orientations):
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", RuntimeWarning)
                        Xu, yu, wu = dedupe_training(X[train], y_arr[train])
                        model = fit_classifier(
                            Xu, yu, row.kind, cfg,
                            derive_seed(grid.seed, sect.name, col.name, row.name, oname),
                            sample_weight=wu,
                        )
                        labels, conf = predict_with_confidence(model, X[test])
                    per_orient.append((labels, conf))
                    correct[o] = sum(a == b for a, b in zip(labels, y_arr[test]))
            acc_ab = correct[0] / len(fold_b)
            acc_ba = correct[1] / len(fold_a)
            member_preds[row.name] = per_orient
            cells.append(
                CellResult(
                    section=sect.name, column=col.name, row=row.name, kind=row.kind,
                    target=target, rows=n_rows, classes=n_classes,
                    fold_ab=acc_ab, fold_ba=acc_ba,
                    accuracy=(acc_ab + acc_ba) / 2.0,
                    pooled=(correct[0] + correct[1]) / n_rows,
                    seconds=time.perf_counter() - t0,
                )
            )
        except Exception as e:
            failures.append(
                {"section": sect.name, "column": col.name, "row": row.name,
                 "error": f"{type(e).__name__}: {e}"}
            )
    return cells, failures


def _group_task(args):
    instances, grid, si, ci, taxonomy = args
    return _run_group(instances, grid, si, ci, taxonomy)


def thread_count(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    raw = os.environ.get("GAB_THREADS", "").strip()
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def run_grid(
    instances: list[Instance],
    grid: Grid,
    threads: int | None = None,
    sections: list[str] | None = None,
    taxonomy: Taxonomy | None = None,
) -> GridResult:
    """Evaluate a grid; `sections` restricts by name. Results are identical
    for any thread count."""
    validate_grid(grid)
    taxonomy = taxonomy or builtin_taxonomy()
    if sections is not None:
        wanted = set(sections)
        unknown = wanted - {s.name for s in grid.sections}
        if unknown:
            raise DataError(f"unknown sections: {', '.join(sorted(unknown))}")
    tasks = [
        (si, ci)
        for si, sect in enumerate(grid.sections)
        if sections is None or sect.name in set(sections)
        for ci in range(len(sect.columns))
    ]
    n_workers = thread_count(threads)
    cells: list[CellResult] = []
    failures: list[dict] = []
    if n_workers > 1 and len(tasks) > 1:
        payloads = [(instances, grid, si, ci, taxonomy) for si, ci in tasks]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for got_cells, got_failures in pool.map(_group_task, payloads):
                cells.extend(got_cells)
                failures.extend(got_failures)
    else:
        for si, ci in tasks:
            got_cells, got_failures = _run_group(instances, grid, si, ci, taxonomy)
            cells.extend(got_cells)
            failures.extend(got_failures)
    return GridResult(grid.name, grid.seed, cells, failures)
