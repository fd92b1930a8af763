"""Domain model for grasp-annotated manipulation data.

An *instance* is one annotated video frame of a person holding an object:
which of the 33 fine grasp types the hand uses, which opposition plane the
grasp acts through, which object dimension is grasped (any non-empty subset
of {a, b, c}), the relative motion constraint between hand and environment
(three symbols, one per axis, each of u/t/r/x), and whether force is applied
against the object's weight or by interaction with the environment.

An *action* is the pair (object, task); the label string is "object/task".
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

COARSE_CLASSES = ("intermediate", "power", "precision")
OPPOSITION_TYPES = ("pad", "palm", "side")
FORCE_CLASSES = ("interaction", "weight")
DIMENSION_AXES = "abc"
CONSTRAINT_SYMBOLS = "rtux"
N_FINE_GRASPS = 33

# Every three-symbol constraint string over the symbol alphabet, in
# lexicographic order. The encoder treats this as a closed vocabulary so
# feature layout never depends on which constraints a dataset happens to use.
ALL_CONSTRAINTS = tuple(
    "".join(t) for t in itertools.product(CONSTRAINT_SYMBOLS, repeat=3)
)

CSV_COLUMNS = (
    "subject",
    "profession",
    "video",
    "sequence_id",
    "instance_id",
    "object",
    "task",
    "grasp",
    "opposition",
    "grasped_dim",
    "constraint",
    "force",
)


class GabError(Exception):
    """Base class for every error this package raises on purpose."""


class DataError(GabError):
    """Bad input data (malformed files, invalid records, impossible requests)."""


class TaxonomyError(DataError):
    pass


class BadHeader(DataError):
    pass


class RaggedRow(DataError):
    def __init__(self, row: int, expected: int, got: int):
        self.row = row
        super().__init__(f"line {row}: expected {expected} columns, got {got}")


class ValidationError(DataError):
    """A single record failed validation. `field` names the offending column."""

    field: str = ""

    def __init__(self, message: str, field: str = ""):
        self.field = field
        super().__init__(message)


class EmptyField(ValidationError):
    def __init__(self, field: str):
        super().__init__(f"required field {field!r} is empty", field)


class UnknownGrasp(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"grasp {name!r} is not in the taxonomy", "grasp")


class UnknownOpposition(ValidationError):
    def __init__(self, name: str):
        super().__init__(
            f"opposition {name!r} not one of {OPPOSITION_TYPES}", "opposition"
        )


class BadDimension(ValidationError):
    def __init__(self, raw: str):
        super().__init__(
            f"grasped dimension {raw!r} is not a non-empty subset of "
            f"{{{', '.join(DIMENSION_AXES)}}}",
            "grasped_dim",
        )


class BadConstraintString(ValidationError):
    def __init__(self, raw: str):
        super().__init__(
            f"constraint {raw!r} must be exactly 3 symbols from "
            f"{{{', '.join(CONSTRAINT_SYMBOLS)}}}",
            "constraint",
        )


class UnknownForce(ValidationError):
    def __init__(self, name: str):
        super().__init__(f"force {name!r} not one of {FORCE_CLASSES}", "force")


class MixedLabels(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DegenerateData(DataError):
    pass


class InvalidConfig(DataError):
    pass


class InvalidSpec(DataError):
    pass


@dataclass(frozen=True)
class Taxonomy:
    """The closed 33-type grasp taxonomy.

    `fine_types` is sorted, so the position of a grasp name in it is the
    canonical index used by histogram encodings.
    """

    fine_types: tuple[str, ...]
    coarse: Mapping[str, str]
    opposition: Mapping[str, str]

    def __contains__(self, name: str) -> bool:
        return name in self.coarse

    def __len__(self) -> int:
        return len(self.fine_types)

    def index(self, name: str) -> int:
        try:
            return self.fine_types.index(name)
        except ValueError:
            raise UnknownGrasp(name) from None

    def coarse_of(self, name: str) -> str:
        try:
            return self.coarse[name]
        except KeyError:
            raise UnknownGrasp(name) from None

    def opposition_of(self, name: str) -> str:
        try:
            return self.opposition[name]
        except KeyError:
            raise UnknownGrasp(name) from None


def _canon_name(raw: str) -> str:
    # lowercase, trimmed, single hyphens between words
    s = raw.strip().lower().replace("_", " ").replace("-", " ")
    return "-".join(s.split())


def load_taxonomy(path) -> Taxonomy:
    """Read a tab-separated taxonomy table: fine, coarse, opposition.

    The table must contain exactly the 33 fine grasp types, each mapped to a
    coarse class and an opposition type from the closed sets.
    """
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise TaxonomyError(f"{path}: empty taxonomy file")
    header = lines[0].split("\t")
    if header != ["fine", "coarse", "opposition"]:
        raise TaxonomyError(f"{path}: bad header {header!r}")
    coarse: dict[str, str] = {}
    opposition: dict[str, str] = {}
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split("\t")
        if len(parts) != 3:
            raise TaxonomyError(f"{path} line {i}: expected 3 columns")
        fine, co, op = (_canon_name(p) for p in parts)
        if not fine:
            raise TaxonomyError(f"{path} line {i}: empty fine grasp name")
        if fine in coarse:
            raise TaxonomyError(f"{path} line {i}: duplicate grasp {fine!r}")
        if co not in COARSE_CLASSES:
            raise TaxonomyError(f"{path} line {i}: unknown coarse class {co!r}")
        if op not in OPPOSITION_TYPES:
            raise TaxonomyError(f"{path} line {i}: unknown opposition {op!r}")
        coarse[fine] = co
        opposition[fine] = op
    if len(coarse) != N_FINE_GRASPS:
        raise TaxonomyError(
            f"{path}: expected {N_FINE_GRASPS} grasp types, got {len(coarse)}"
        )
    return Taxonomy(tuple(sorted(coarse)), coarse, opposition)


_BUILTIN: Taxonomy | None = None


def builtin_taxonomy() -> Taxonomy:
    """The packaged taxonomy table (loaded once, cached)."""
    global _BUILTIN
    if _BUILTIN is None:
        ref = resources.files("gab.data").joinpath("grasp33.tsv")
        with resources.as_file(ref) as p:
            _BUILTIN = load_taxonomy(p)
    return _BUILTIN


def canonical_dimension(raw: str) -> str:
    """Canonicalize a grasped-dimension string: "ba" and "ab" both -> "ab"."""
    s = raw.strip().lower()
    if not s:
        raise BadDimension(raw)
    axes = set(s)
    if not axes <= set(DIMENSION_AXES):
        raise BadDimension(raw)
    return "".join(sorted(axes))


@dataclass(frozen=True)
class Instance:
    """One validated grasp instance. `coarse` is derived from the taxonomy."""

    subject: str
    sequence_id: str
    object: str
    task: str
    grasp: str
    coarse: str
    opposition: str
    dimension: str
    constraint: str
    force: str

    @property
    def action_label(self) -> str:
        return f"{self.object}/{self.task}"

    def to_dict(self) -> dict:
        return {
            "subject": self.subject,
            "sequence_id": self.sequence_id,
            "object": self.object,
            "task": self.task,
            "grasp": self.grasp,
            "opposition": self.opposition,
            "dimension": self.dimension,
            "constraint": self.constraint,
            "force": self.force,
        }


def validate_instance(record: Mapping[str, str], taxonomy: Taxonomy) -> Instance:
    """Validate one raw record and return the canonical Instance.

    Accepts either CSV-style keys (grasped_dim) or serialized-instance keys
    (dimension). Raises a ValidationError subclass naming the bad field.
    An empty opposition is filled in from the taxonomy; a non-empty one is
    validated against the closed set but kept as recorded.
    """
    def fetch(key: str, alt: str = "") -> str:
        v = record.get(key)
        if v is None and alt:
            v = record.get(alt)
        return (v or "").strip()

    subject = fetch("subject")
    sequence_id = fetch("sequence_id")
    obj = _canon_name(fetch("object"))
    task = _canon_name(fetch("task"))
    for field, value in (
        ("subject", subject),
        ("sequence_id", sequence_id),
        ("object", obj),
        ("task", task),
    ):
        if not value:
            raise EmptyField(field)

    grasp = _canon_name(fetch("grasp"))
    if not grasp:
        raise EmptyField("grasp")
    if grasp not in taxonomy:
        raise UnknownGrasp(grasp)
    coarse = taxonomy.coarse_of(grasp)

    opposition = fetch("opposition").lower()
    if not opposition:
        opposition = taxonomy.opposition_of(grasp)
    elif opposition not in OPPOSITION_TYPES:
        raise UnknownOpposition(opposition)

    dim_raw = fetch("grasped_dim", "dimension")
    if not dim_raw:
        raise EmptyField("grasped_dim")
    dimension = canonical_dimension(dim_raw)

    constraint = fetch("constraint").lower()
    if not constraint:
        raise EmptyField("constraint")
    if len(constraint) != 3 or any(c not in CONSTRAINT_SYMBOLS for c in constraint):
        raise BadConstraintString(constraint)

    force = fetch("force").lower()
    if not force:
        raise EmptyField("force")
    if force not in FORCE_CLASSES:
        raise UnknownForce(force)

    return Instance(
        subject=subject,
        sequence_id=sequence_id,
        object=obj,
        task=task,
        grasp=grasp,
        coarse=coarse,
        opposition=opposition,
        dimension=dimension,
        constraint=constraint,
        force=force,
    )


def action_labels(instances: Iterable[Instance]) -> list[str]:
    """Distinct action labels in first-seen order."""
    seen: dict[str, None] = {}
    for inst in instances:
        seen.setdefault(inst.action_label, None)
    return list(seen)
