"""Feature encoding: instances and sequences to dense vectors.

Instance vectors are concatenated one-hot blocks, one block per selected
attribute, in the fixed order: coarse grasp class, fine grasp type,
opposition, object, grasped dimension, motion constraint. Coarse, fine,
opposition and constraint blocks use closed vocabularies (the taxonomy and
the full constraint alphabet), so their width never depends on the data;
object and dimension blocks enumerate the values observed in the dataset,
sorted.

Sequence vectors are fine-grasp histograms (33 counts, taxonomy order) plus
the object, either as one ordinal slot (value = object index) or as a
one-hot block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ALL_CONSTRAINTS,
    COARSE_CLASSES,
    OPPOSITION_TYPES,
    DataError,
    Instance,
    MixedLabels,
    Taxonomy,
)

ATTRIBUTES = (
    "grasp_coarse",
    "grasp_fine",
    "opposition",
    "object",
    "dimension",
    "constraint",
)

TARGETS = ("action", "constraint", "force")

SEQUENCE_VARIANTS = ("ordinal-object", "onehot-object")


def parse_subset(names) -> tuple[str, ...]:
    """Normalize a list of attribute names to canonical order, validating."""
    chosen = set()
    for n in names:
        if n not in ATTRIBUTES:
            raise DataError(f"unknown attribute {n!r}, expected one of {ATTRIBUTES}")
        chosen.add(n)
    if not chosen:
        raise DataError("empty attribute subset")
    return tuple(a for a in ATTRIBUTES if a in chosen)


def attribute_value(inst: Instance, attr: str) -> str:
    if attr == "grasp_coarse":
        return inst.coarse
    if attr == "grasp_fine":
        return inst.grasp
    if attr == "opposition":
        return inst.opposition
    if attr == "object":
        return inst.object
    if attr == "dimension":
        return inst.dimension
    if attr == "constraint":
        return inst.constraint
    raise DataError(f"unknown attribute {attr!r}")


@dataclass(frozen=True)
class Vocabulary:
    """Per-attribute value lists plus the offsets of their one-hot blocks."""

    attrs: tuple[str, ...]
    values: dict[str, tuple[str, ...]]
    offsets: dict[str, int]
    dim: int
    index: dict[str, dict[str, int]]

    def position(self, attr: str, value: str) -> int:
        try:
            return self.offsets[attr] + self.index[attr][value]
        except KeyError:
            raise DataError(f"value {value!r} not in {attr} vocabulary") from None


def build_vocab(
    instances: list[Instance], subset, taxonomy: Taxonomy
) -> Vocabulary:
    attrs = parse_subset(subset)
    values: dict[str, tuple[str, ...]] = {}
    for attr in attrs:
        if attr == "grasp_coarse":
            vals = COARSE_CLASSES
        elif attr == "grasp_fine":
            vals = taxonomy.fine_types
        elif attr == "opposition":
            vals = OPPOSITION_TYPES
        elif attr == "constraint":
            vals = ALL_CONSTRAINTS
        else:  # open vocabularies: observed values, sorted
            vals = tuple(sorted({attribute_value(i, attr) for i in instances}))
            if not vals:
                raise DataError(f"no values observed for attribute {attr!r}")
        values[attr] = vals
    offsets = {}
    dim = 0
    for attr in attrs:
        offsets[attr] = dim
        dim += len(values[attr])
    index = {attr: {v: i for i, v in enumerate(values[attr])} for attr in attrs}
    return Vocabulary(attrs, values, offsets, dim, index)


def object_vocab(instances: list[Instance]) -> tuple[str, ...]:
    return tuple(sorted({i.object for i in instances}))


def encode_instance(inst: Instance, vocab: Vocabulary) -> np.ndarray:
    """One-hot encode a single instance; the vector sums to len(vocab.attrs)."""
    x = np.zeros(vocab.dim)
    for attr in vocab.attrs:
        x[vocab.position(attr, attribute_value(inst, attr))] = 1.0
    return x


def target_label(inst: Instance, target: str) -> str:
    if target == "action":
        return inst.action_label
    if target == "constraint":
        return inst.constraint
    if target == "force":
        return inst.force
    raise DataError(f"unknown target {target!r}, expected one of {TARGETS}")


def encode_matrix(
    instances: list[Instance], vocab: Vocabulary, target: str = "action"
) -> tuple[np.ndarray, list[str]]:
    """Encode instances to a dense (n, dim) matrix plus target labels."""
    n = len(instances)
    X = np.zeros((n, vocab.dim))
    rows = np.arange(n)
    for attr in vocab.attrs:
        cols = np.fromiter(
            (vocab.position(attr, attribute_value(i, attr)) for i in instances),
            dtype=np.int64,
            count=n,
        )
        X[rows, cols] = 1.0
    y = [target_label(i, target) for i in instances]
    return X, y


@dataclass(frozen=True)
class Sequence:
    """Consecutive instances sharing a sequence id; all must share one action."""

    sequence_id: str
    instances: tuple[Instance, ...]

    @property
    def action_label(self) -> str:
        return self.instances[0].action_label

    @property
    def object(self) -> str:
        return self.instances[0].object


def group_sequences(
    instances: list[Instance], min_instances: int = 2
) -> list[Sequence]:
    """Group instances by sequence id, in first-seen order.

    Sequences shorter than `min_instances` are dropped (default 2: a single
    frame carries no grasp-usage statistics). A sequence whose instances
    disagree on the action label raises MixedLabels.
    """
    groups: dict[str, list[Instance]] = {}
    for inst in instances:
        groups.setdefault(inst.sequence_id, []).append(inst)
    out = []
    for sid, members in groups.items():
        labels = {m.action_label for m in members}
        if len(labels) > 1:
            raise MixedLabels(
                f"sequence {sid!r} spans actions {sorted(labels)}"
            )
        if len(members) >= min_instances:
            out.append(Sequence(sid, tuple(members)))
    return out


def encode_sequence(
    seq: Sequence, taxonomy: Taxonomy, objects, variant: str
) -> np.ndarray:
    """Fine-grasp histogram plus object slot(s).

    ordinal-object: 33 counts then one slot holding the object's index.
    onehot-object: 33 counts then a one-hot block over `objects`.
    """
    if variant not in SEQUENCE_VARIANTS:
        raise DataError(
            f"unknown sequence variant {variant!r}, expected one of {SEQUENCE_VARIANTS}"
        )
    counts = np.zeros(len(taxonomy))
    for inst in seq.instances:
        counts[taxonomy.index(inst.grasp)] += 1.0
    try:
        obj_idx = objects.index(seq.object)
    except ValueError:
        raise DataError(f"object {seq.object!r} not in object vocabulary") from None
    if variant == "ordinal-object":
        return np.concatenate([counts, [float(obj_idx)]])
    onehot = np.zeros(len(objects))
    onehot[obj_idx] = 1.0
    return np.concatenate([counts, onehot])


def encode_sequence_matrix(
    sequences: list[Sequence], taxonomy: Taxonomy, objects, variant: str
) -> tuple[np.ndarray, list[str]]:
    if not sequences:
        raise DataError("no sequences to encode")
    X = np.stack(
        [encode_sequence(s, taxonomy, objects, variant) for s in sequences]
    )
    y = [s.action_label for s in sequences]
    return X, y


def save_matrix(X: np.ndarray, y: list[str], path):
    """Write a labeled matrix: "rows cols" header, then per row the feature
    values space-joined, a tab, and the label."""
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise DataError("matrix and labels disagree")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{X.shape[0]} {X.shape[1]}\n")
        for row, label in zip(X, y):
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\t" + label + "\n")


def load_matrix(path) -> tuple[np.ndarray, list[str]]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: bad matrix header")
        try:
            n, d = int(header[0]), int(header[1])
        except ValueError:
            raise DataError(f"{path}: bad matrix header") from None
        X = np.zeros((n, d))
        y = []
        for i in range(n):
            line = fh.readline()
            if not line:
                raise DataError(f"{path}: expected {n} rows, file ends at {i}")
            body, _, label = line.rstrip("\n").partition("\t")
            if not label:
                raise DataError(f"{path} row {i + 1}: missing label column")
            vals = body.split()
            if len(vals) != d:
                raise DataError(
                    f"{path} row {i + 1}: expected {d} values, got {len(vals)}"
                )
            X[i] = [float(v) for v in vals]
            y.append(label)
    return X, y
