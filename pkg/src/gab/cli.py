"""Command line client for the pipeline service.

Every verb builds a request and posts it to the service API: by default an
in-process application instance (no network), or a remote server via
--server, in which case file paths in arguments name files on the server's
filesystem. Exit codes: 0 success, 1 usage or internal errors, 2 data
errors (bad input files, bad configs, bad specs).
"""

from __future__ import annotations

import json
import sys

import click

from .core import GabError
from .encode import SEQUENCE_VARIANTS, TARGETS
from .learn import CLASSIFIER_KINDS


class RemoteDataError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _call(server: str | None, verb: str, payload: dict) -> dict:
    if server:
        import httpx

        client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        try:
            resp = client.post(f"/v1/{verb}", json=payload)
        except httpx.HTTPError as e:
            raise RemoteDataError("ConnectionError", f"cannot reach {server}: {e}") from None
        finally:
            client.close()
    else:
        from fastapi.testclient import TestClient

        from .service import create_app

        client = TestClient(create_app())
        try:
            resp = client.post(f"/v1/{verb}", json=payload)
        finally:
            client.close()
    if resp.status_code == 200:
        return resp.json()
    try:
        body = resp.json()
    except ValueError:
        body = {}
    if isinstance(body.get("error"), dict):
        err = body["error"]
        raise RemoteDataError(err.get("kind", "DataError"), err.get("message", "request failed"))
    raise click.ClickException(f"service returned {resp.status_code}: {body or resp.text}")


@click.group()
@click.option(
    "--server",
    default=None,
    metavar="URL",
    help="Base URL of a running service; without it the request runs in-process.",
)
@click.pass_context
def cli(ctx, server):
    """Benchmark pipeline for manipulation-action classification."""
    ctx.obj = server


@cli.command()
@click.argument("csv_path")
@click.option("-o", "--out", "out_path", required=True, help="Instance file to write (JSON lines).")
@click.option("--exclude", multiple=True, metavar="OBJECT", help="Drop instances of this object.")
@click.pass_obj
def ingest(server, csv_path, out_path, exclude):
    """Parse and clean a raw annotation CSV into an instance file."""
    got = _call(
        server,
        "ingest",
        {"csv_path": csv_path, "out_path": out_path, "exclude_objects": list(exclude)},
    )
    for w in got["warnings"]:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"kept {got['kept']} of {got['total']} rows -> {got['out_path']}")
    for reason, n in sorted(got["dropped"].items()):
        click.echo(f"  dropped {n}: {reason}")
    click.echo(f"{got['actions']} actions, {got['distinct_constraints']} distinct constraints")


@cli.command("make-synthetic")
@click.option("-o", "--out", "out_path", required=True)
@click.option("--spec", "spec_path", default=None, help="Generate from a saved spec file.")
@click.option("--corpus-scale", is_flag=True, help="455 actions / 6188 instances shape.")
@click.option("--actions", type=int, default=40, show_default=True)
@click.option("--objects", type=int, default=12, show_default=True)
@click.option("--instances", "n_instances", type=int, default=800, show_default=True)
@click.option("--noise", type=float, default=0.05, show_default=True, help="Label noise rate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--save-spec", "save_spec", default=None, help="Also write the generating spec.")
@click.pass_obj
def make_synthetic(server, out_path, spec_path, corpus_scale, actions, objects, n_instances, noise, seed, save_spec):
    """Draw a synthetic dataset with a known generating distribution."""
    payload: dict = {"out_path": out_path, "seed": seed, "save_spec_path": save_spec}
    if spec_path:
        payload["spec_path"] = spec_path
    elif corpus_scale:
        payload["corpus_scale"] = True
    else:
        payload["random"] = {
            "actions": actions,
            "objects": objects,
            "instances": n_instances,
            "label_noise": noise,
        }
    got = _call(server, "synthetic", payload)
    click.echo(
        f"wrote {got['instances']} instances, {got['actions']} actions,"
        f" {got['sequences']} sequences -> {got['out_path']}"
    )
    if got.get("spec_path"):
        click.echo(f"spec -> {got['spec_path']}")


@cli.command()
@click.argument("instances_path")
@click.option("-o", "--out", "out_path", required=True, help="Matrix file to write.")
@click.option("--level", type=click.Choice(["instance", "sequence"]), default="instance", show_default=True)
@click.option(
    "--subset",
    default="object,grasp_fine",
    show_default=True,
    help="Comma-separated attributes for instance-level encoding.",
)
@click.option("--variant", type=click.Choice(list(SEQUENCE_VARIANTS)), default=SEQUENCE_VARIANTS[0], show_default=True)
@click.option("--target", type=click.Choice(list(TARGETS)), default="action", show_default=True)
@click.pass_obj
def encode(server, instances_path, out_path, level, subset, variant, target):
    """One-hot encode instances (or grasp-usage vectors for sequences)."""
    got = _call(
        server,
        "encode",
        {
            "instances_path": instances_path,
            "out_path": out_path,
            "level": level,
            "subset": [s for s in subset.split(",") if s],
            "variant": variant,
            "target": target,
        },
    )
    click.echo(f"{got['rows']} x {got['cols']} matrix, {got['classes']} classes -> {got['out_path']}")


@cli.command()
@click.argument("matrix_path")
@click.option("-o", "--out", "model_path", required=True, help="Model file to write.")
@click.option("--classifier", type=click.Choice(list(CLASSIFIER_KINDS)), required=True)
@click.option("--config", "config_path", default=None, help="JSON training config.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def train(server, matrix_path, model_path, classifier, config_path, seed):
    """Fit a classifier on a labeled matrix file."""
    config = {}
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                config = json.load(fh)
        except OSError as e:
            raise RemoteDataError("OSError", f"{config_path}: {e.strerror or e}") from None
        except json.JSONDecodeError as e:
            raise RemoteDataError("InvalidConfig", f"{config_path}: {e}") from None
    got = _call(
        server,
        "train",
        {
            "matrix_path": matrix_path,
            "model_path": model_path,
            "classifier": classifier,
            "config": config,
            "seed": seed,
        },
    )
    for w in got["warnings"]:
        click.echo(f"warning: {w}", err=True)
    click.echo(f"trained {got['classifier']} on {got['rows']} rows, {got['classes']} classes -> {got['model_path']}")


@cli.command()
@click.argument("matrix_path")
@click.option("--model", "model_path", required=True)
@click.option("-o", "--out", "out_path", default=None, help="Write label<TAB>confidence lines here.")
@click.pass_obj
def predict(server, matrix_path, model_path, out_path):
    """Predict labels for a matrix file and score against its labels."""
    got = _call(
        server,
        "predict",
        {"matrix_path": matrix_path, "model_path": model_path, "out_path": out_path},
    )
    if got.get("labels") is not None:
        for lab in got["labels"]:
            click.echo(lab)
    else:
        click.echo(f"predictions -> {got['out_path']}")
    click.echo(f"accuracy {got['accuracy']:.4f} over {got['rows']} rows", err=out_path is None)


@cli.command()
@click.argument("instances_path")
@click.option("-o", "--out", "out_path", default="results.csv", show_default=True)
@click.option("--grid", "grid_path", default=None, help="Grid file; default is the packaged grid.")
@click.option("--section", "sections", multiple=True, help="Run only these sections.")
@click.option("--threads", type=int, default=None, help="Worker processes; default GAB_THREADS or 1.")
@click.pass_obj
def bench(server, instances_path, out_path, grid_path, sections, threads):
    """Run the benchmark grid and write a results file."""
    got = _call(
        server,
        "bench",
        {
            "instances_path": instances_path,
            "out_path": out_path,
            "grid_path": grid_path,
            "sections": list(sections) or None,
            "threads": threads,
        },
    )
    for c in got["cells"]:
        click.echo(f"{c['section']}/{c['column']}/{c['row']}: {c['accuracy']:.4f}")
    for f in got["failures"]:
        click.echo(f"failed {f['section']}/{f['column']}/{f['row']}: {f['error']}", err=True)
    click.echo(f"{len(got['cells'])} cells in {got['seconds']:.1f}s -> {got['out_path']}")
    if got["failures"]:
        raise RemoteDataError("CellFailure", f"{len(got['failures'])} cells failed")


@cli.command()
@click.argument("results_path")
@click.option("-o", "--out", "markdown_path", default="report.md", show_default=True)
@click.option("--csv-out", "csv_path", default="report.csv", show_default=True)
@click.pass_obj
def report(server, results_path, markdown_path, csv_path):
    """Render a results file as Markdown and CSV tables."""
    got = _call(
        server,
        "report",
        {"results_path": results_path, "markdown_path": markdown_path, "csv_path": csv_path},
    )
    click.echo(f"{got['cells']} cells -> {got['markdown_path']}, {got['csv_path']}")
    if got["failures"]:
        click.echo(f"note: {got['failures']} failed cells are listed in the report", err=True)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.ClickException as e:
        e.show()
        sys.exit(1)
    except click.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    except RemoteDataError as e:
        click.echo(f"error: {e.kind}: {e}", err=True)
        sys.exit(2)
    except (GabError, OSError) as e:
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
