import os

import numpy as np
import pytest

from gab.core import Instance, builtin_taxonomy
from gab.synth import generate_synthetic, make_random_spec


@pytest.fixture(scope="session")
def taxonomy():
    return builtin_taxonomy()


def make_instance(taxonomy, **over):
    """A valid instance with every field overridable."""
    base = dict(
        subject="s01",
        sequence_id="seq-000",
        object="bottle",
        task="drinking",
        grasp="medium-wrap",
        dimension="ab",
        constraint="uuu",
        force="weight",
    )
    base.update(over)
    base["coarse"] = taxonomy.coarse_of(base["grasp"])
    base.setdefault("opposition", taxonomy.opposition_of(base["grasp"]))
    return Instance(**base)


@pytest.fixture
def instance(taxonomy):
    return make_instance(taxonomy)


@pytest.fixture(scope="session")
def small_dataset(taxonomy):
    """Deterministic 12-action dataset used by anything that just needs data."""
    spec = make_random_spec(12, 5, 240, 0.1, seed=42, taxonomy=taxonomy)
    return generate_synthetic(spec, seed=42, taxonomy=taxonomy)


@pytest.fixture(scope="session")
def small_matrix(small_dataset, taxonomy):
    from gab.encode import build_vocab, encode_matrix

    vocab = build_vocab(small_dataset, ["object", "grasp_fine", "dimension"], taxonomy)
    return encode_matrix(small_dataset, vocab, target="action")


RAW_HEADER = (
    "subject,profession,video,sequence_id,instance_id,"
    "object,task,grasp,opposition,grasped_dim,constraint,force"
)


def raw_row(**over):
    base = dict(
        subject="S1",
        profession="machinist",
        video="v01",
        sequence_id="v01-008",
        instance_id="17",
        object="Bottle",
        task="Drinking",
        grasp="Medium Wrap",
        opposition="palm",
        grasped_dim="ba",
        constraint="uuu",
        force="weight",
    )
    base.update(over)
    return ",".join(
        base[k]
        for k in (
            "subject", "profession", "video", "sequence_id", "instance_id",
            "object", "task", "grasp", "opposition", "grasped_dim",
            "constraint", "force",
        )
    )


@pytest.fixture
def raw_csv_text():
    rows = [
        RAW_HEADER,
        raw_row(),
        raw_row(instance_id="18", task="holding"),          # dropped: static hold
        raw_row(instance_id="19", grasp=""),                # dropped: no grasp
        raw_row(instance_id="20", constraint=""),           # dropped: no constraint
        raw_row(instance_id="21", force=""),                # dropped: no force
        raw_row(instance_id="22", object="Knife", task="cut",
                grasp="lateral", opposition="", grasped_dim="c",
                constraint="ttt", force="interaction"),
    ]
    return "\n".join(rows) + "\n"


def rng_matrix(seed, n, d, classes=3):
    """Random one-hot-free float matrix plus string labels, for learner tests."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = [f"c{k}" for k in rng.integers(classes, size=n)]
    return X, y


_YALE_CACHE: dict = {}


def yale_instances_and_grid():
    """Ingest the corpus GAB_YALE_CSV points at and run the packaged grid.

    The grid run takes on the order of 15 minutes, so the result is cached
    for the whole session and shared by every test that needs it. Callers
    must skip before calling when the env var is unset.
    """
    if "grid" not in _YALE_CACHE:
        from gab.bench import builtin_grid, run_grid, thread_count
        from gab.ingest import clean, parse_csv

        with open(os.environ["GAB_YALE_CSV"], encoding="utf-8") as fh:
            records = parse_csv(fh.read())
        instances, _ = clean(records, builtin_taxonomy())
        _YALE_CACHE["instances"] = instances
        _YALE_CACHE["grid"] = run_grid(instances, builtin_grid(), threads=thread_count())
    return _YALE_CACHE["instances"], _YALE_CACHE["grid"]
