"""Synthetic dataset generation from a declarative generative model.

A synthetic spec (JSON, format tag "gab-synthetic/1") fixes, per action:
the object and task, how many instances to draw, and one categorical
distribution per annotation attribute (grasp, dimension, constraint, force).
Attributes are drawn independently given the action. With probability
`label_noise` an instance's attribute tuple is instead drawn uniformly over
the global alphabets, which makes the optimal classifier computable in
closed form for testing.

Draw order is frozen so a (spec, seed) pair is exactly reproducible:
actions in file order; per action, sequences are drawn until the instance
budget is used, each consuming one length draw and one subject draw, then
per instance one noise draw followed by either four uniform alphabet draws
(noisy) or four distribution draws (clean), always in the order grasp,
dimension, constraint, force.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .core import (
    ALL_CONSTRAINTS,
    CONSTRAINT_SYMBOLS,
    DIMENSION_AXES,
    FORCE_CLASSES,
    Instance,
    InvalidSpec,
    Taxonomy,
    builtin_taxonomy,
    canonical_dimension,
)

FORMAT_TAG = "gab-synthetic/1"

ALL_DIMENSIONS = tuple(
    sorted(
        "".join(c)
        for r in range(1, len(DIMENSION_AXES) + 1)
        for c in itertools.combinations(DIMENSION_AXES, r)
    )
)

ATTRS = ("grasp", "dimension", "constraint", "force")


@dataclass(frozen=True)
class ActionSpec:
    object: str
    task: str
    count: tuple[int, int]  # inclusive instance-count range
    dists: dict[str, dict[str, float]]  # attr -> value -> probability

    @property
    def label(self) -> str:
        return f"{self.object}/{self.task}"


@dataclass(frozen=True)
class SyntheticSpec:
    label_noise: float
    alphabets: dict[str, tuple[str, ...]]
    sequence_length: tuple[int, int]
    subjects: tuple[str, ...]
    actions: tuple[ActionSpec, ...]


def _check_dist(dist: dict[str, float], alphabet, what: str):
    if not dist:
        raise InvalidSpec(f"{what}: empty distribution")
    total = 0.0
    for k, p in dist.items():
        if k not in alphabet:
            raise InvalidSpec(f"{what}: value {k!r} not in alphabet")
        if p < 0:
            raise InvalidSpec(f"{what}: negative probability for {k!r}")
        total += p
    if abs(total - 1.0) > 1e-6:
        raise InvalidSpec(f"{what}: probabilities sum to {total}, expected 1")


def validate_spec(spec: SyntheticSpec, taxonomy: Taxonomy | None = None):
    taxonomy = taxonomy or builtin_taxonomy()
    if not 0.0 <= spec.label_noise <= 1.0:
        raise InvalidSpec(f"label_noise {spec.label_noise} outside [0, 1]")
    for attr in ATTRS:
        if not spec.alphabets.get(attr):
            raise InvalidSpec(f"missing alphabet for {attr!r}")
    for g in spec.alphabets["grasp"]:
        if g not in taxonomy:
            raise InvalidSpec(f"grasp alphabet entry {g!r} not in taxonomy")
    for d in spec.alphabets["dimension"]:
        if canonical_dimension(d) != d:
            raise InvalidSpec(f"dimension alphabet entry {d!r} not canonical")
    for c in spec.alphabets["constraint"]:
        if len(c) != 3 or any(s not in CONSTRAINT_SYMBOLS for s in c):
            raise InvalidSpec(f"constraint alphabet entry {c!r} invalid")
    for f in spec.alphabets["force"]:
        if f not in FORCE_CLASSES:
            raise InvalidSpec(f"force alphabet entry {f!r} invalid")
    lo, hi = spec.sequence_length
    if not 1 <= lo <= hi:
        raise InvalidSpec(f"bad sequence_length range {spec.sequence_length}")
    if not spec.subjects:
        raise InvalidSpec("no subjects")
    if not spec.actions:
        raise InvalidSpec("no actions")
    seen = set()
    for a in spec.actions:
        if not a.object or not a.task:
            raise InvalidSpec("action with empty object or task")
        if a.label in seen:
            raise InvalidSpec(f"duplicate action {a.label!r}")
        seen.add(a.label)
        clo, chi = a.count
        if not 1 <= clo <= chi:
            raise InvalidSpec(f"{a.label}: bad instance count range {a.count}")
        for attr in ATTRS:
            if attr not in a.dists:
                raise InvalidSpec(f"{a.label}: missing {attr} distribution")
            _check_dist(a.dists[attr], spec.alphabets[attr], f"{a.label}/{attr}")


def spec_to_json(spec: SyntheticSpec) -> str:
    doc = {
        "format": FORMAT_TAG,
        "label_noise": spec.label_noise,
        "alphabets": {k: list(v) for k, v in spec.alphabets.items()},
        "sequence_length": list(spec.sequence_length),
        "subjects": list(spec.subjects),
        "actions": [
            {
                "object": a.object,
                "task": a.task,
                "count": list(a.count),
                **{attr: a.dists[attr] for attr in ATTRS},
            }
            for a in spec.actions
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def spec_from_json(text: str) -> SyntheticSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidSpec(f"not valid JSON: {e}") from None
    if doc.get("format") != FORMAT_TAG:
        raise InvalidSpec(f"format tag {doc.get('format')!r}, expected {FORMAT_TAG!r}")
    try:
        actions = tuple(
            ActionSpec(
                object=a["object"],
                task=a["task"],
                count=(int(a["count"][0]), int(a["count"][1])),
                dists={attr: dict(a[attr]) for attr in ATTRS},
            )
            for a in doc["actions"]
        )
        spec = SyntheticSpec(
            label_noise=float(doc["label_noise"]),
            alphabets={k: tuple(v) for k, v in doc["alphabets"].items()},
            sequence_length=(
                int(doc["sequence_length"][0]),
                int(doc["sequence_length"][1]),
            ),
            subjects=tuple(doc["subjects"]),
            actions=actions,
        )
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise InvalidSpec(f"malformed spec: {e!r}") from None
    return spec


def _draw(rng: np.random.Generator, dist: dict[str, float]) -> str:
    # inverse-CDF over sorted keys; one uniform draw per call
    u = rng.random()
    acc = 0.0
    keys = sorted(dist)
    for k in keys:
        acc += dist[k]
        if u < acc:
            return k
    return keys[-1]


def generate_synthetic(
    spec: SyntheticSpec, seed: int, taxonomy: Taxonomy | None = None
) -> list[Instance]:
    """Draw a dataset from the spec. Identical (spec, seed) gives identical output."""
    taxonomy = taxonomy or builtin_taxonomy()
    validate_spec(spec, taxonomy)
    rng = np.random.default_rng(seed)
    slo, shi = spec.sequence_length
    out: list[Instance] = []
    for ai, act in enumerate(spec.actions):
        clo, chi = act.count
        n = int(rng.integers(clo, chi + 1)) if clo < chi else clo
        made = 0
        seq_no = 0
        while made < n:
            length = min(n - made, int(rng.integers(slo, shi + 1)))
            subject = spec.subjects[int(rng.integers(len(spec.subjects)))]
            seq_id = f"a{ai:04d}-s{seq_no:03d}"
            for _ in range(length):
                if spec.label_noise > 0.0 and rng.random() < spec.label_noise:
                    vals = {
                        attr: spec.alphabets[attr][
                            int(rng.integers(len(spec.alphabets[attr])))
                        ]
                        for attr in ATTRS
                    }
                else:
                    vals = {attr: _draw(rng, act.dists[attr]) for attr in ATTRS}
                out.append(
                    Instance(
                        subject=subject,
                        sequence_id=seq_id,
                        object=act.object,
                        task=act.task,
                        grasp=vals["grasp"],
                        coarse=taxonomy.coarse_of(vals["grasp"]),
                        opposition=taxonomy.opposition_of(vals["grasp"]),
                        dimension=vals["dimension"],
                        constraint=vals["constraint"],
                        force=vals["force"],
                    )
                )
                made += 1
            seq_no += 1
    return out


def _random_dist(rng: np.random.Generator, alphabet, k: int) -> dict[str, float]:
    k = min(k, len(alphabet))
    support = sorted(
        rng.choice(len(alphabet), size=k, replace=False).tolist()
    )
    weights = rng.random(k) + 0.25
    weights /= weights.sum()
    return {alphabet[i]: float(w) for i, w in zip(support, weights)}


def make_random_spec(
    n_actions: int,
    n_objects: int,
    total_instances: int,
    label_noise: float,
    seed: int,
    grasp_alphabet_size: int = 8,
    dimension_alphabet_size: int = 4,
    constraint_alphabet_size: int = 6,
    values_per_attribute: int = 2,
    sequence_length: tuple[int, int] = (1, 3),
    taxonomy: Taxonomy | None = None,
) -> SyntheticSpec:
    """Build a random but valid spec with exact per-action instance counts.

    The instance budget is split as evenly as possible, so the generated
    dataset has exactly `total_instances` rows.
    """
    taxonomy = taxonomy or builtin_taxonomy()
    if n_actions < 1 or n_objects < 1 or total_instances < n_actions:
        raise InvalidSpec("need >=1 action, >=1 object, >=1 instance per action")
    rng = np.random.default_rng(seed)
    alphabets = {
        "grasp": tuple(
            sorted(
                np.array(taxonomy.fine_types)[
                    rng.choice(
                        len(taxonomy.fine_types),
                        size=min(grasp_alphabet_size, len(taxonomy.fine_types)),
                        replace=False,
                    )
                ].tolist()
            )
        ),
        "dimension": tuple(
            sorted(
                np.array(ALL_DIMENSIONS)[
                    rng.choice(
                        len(ALL_DIMENSIONS),
                        size=min(dimension_alphabet_size, len(ALL_DIMENSIONS)),
                        replace=False,
                    )
                ].tolist()
            )
        ),
        "constraint": tuple(
            sorted(
                np.array(ALL_CONSTRAINTS)[
                    rng.choice(
                        len(ALL_CONSTRAINTS),
                        size=min(constraint_alphabet_size, len(ALL_CONSTRAINTS)),
                        replace=False,
                    )
                ].tolist()
            )
        ),
        "force": FORCE_CLASSES,
    }
    base, extra = divmod(total_instances, n_actions)
    actions = []
    for i in range(n_actions):
        count = base + (1 if i < extra else 0)
        obj = f"obj{i % n_objects:03d}"
        task = f"task{i // n_objects:03d}"
        dists = {
            attr: _random_dist(rng, alphabets[attr], values_per_attribute)
            for attr in ATTRS
        }
        actions.append(ActionSpec(obj, task, (count, count), dists))
    return SyntheticSpec(
        label_noise=label_noise,
        alphabets=alphabets,
        sequence_length=sequence_length,
        subjects=("s01", "s02", "s03", "s04"),
        actions=tuple(actions),
    )


def make_corpus_scale_spec(seed: int, taxonomy: Taxonomy | None = None) -> SyntheticSpec:
    """A dataset with the published corpus shape: 455 actions, 6188 instances."""
    return make_random_spec(
        n_actions=455,
        n_objects=60,
        total_instances=6188,
        label_noise=0.05,
        seed=seed,
        grasp_alphabet_size=33,
        dimension_alphabet_size=7,
        constraint_alphabet_size=20,
        values_per_attribute=2,
        sequence_length=(1, 3),
        taxonomy=taxonomy,
    )
