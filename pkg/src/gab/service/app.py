"""FastAPI application exposing the pipeline over HTTP.

Routes mirror the pipeline stages one-to-one; each reads and writes files
named in the request, so the server never streams matrices through JSON.
Domain errors (bad data, bad config, bad specs) map to a 422 with a typed
error envelope; unreadable paths behave the same way since a missing file
is a data problem from the caller's point of view.
"""

from __future__ import annotations

import time
import warnings

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import DataError, ValidationError, builtin_taxonomy
from ..encode import (
    build_vocab,
    encode_matrix,
    encode_sequence_matrix,
    group_sequences,
    load_matrix,
    object_vocab,
    save_matrix,
)
from ..bench import (
    accuracy,
    builtin_grid,
    fit_classifier,
    load_grid,
    load_results,
    predict_with_confidence,
    run_grid,
    save_results,
)
from ..ingest import (
    clean,
    exclude_objects,
    load_instances,
    parse_csv,
    save_instances,
)
from ..learn import TrainConfig, load_model, save_model
from ..report import write_report
from ..synth import (
    generate_synthetic,
    make_corpus_scale_spec,
    make_random_spec,
    spec_from_json,
    spec_to_json,
)
from . import schemas as S


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}") from None


def create_app() -> FastAPI:
    app = FastAPI(title="gab", version=__version__)

    @app.exception_handler(DataError)
    async def _data_error(_: Request, exc: DataError):
        body = S.ErrorEnvelope(
            error=S.ErrorBody(
                kind=type(exc).__name__,
                message=str(exc),
                field=getattr(exc, "field", None) if isinstance(exc, ValidationError) else None,
            )
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.exception_handler(OSError)
    async def _os_error(_: Request, exc: OSError):
        body = S.ErrorEnvelope(
            error=S.ErrorBody(kind="OSError", message=str(exc))
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/v1/health", response_model=S.HealthResponse)
    def health():
        return S.HealthResponse(status="ok", version=__version__)

    @app.post("/v1/ingest", response_model=S.IngestResponse)
    def ingest(req: S.IngestRequest):
        taxonomy = builtin_taxonomy()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            records = parse_csv(_read_text(req.csv_path))
            instances, rep = clean(records, taxonomy)
            if req.exclude_objects:
                instances = exclude_objects(instances, req.exclude_objects)
        save_instances(instances, req.out_path)
        return S.IngestResponse(
            out_path=req.out_path,
            total=rep.total,
            kept=len(instances),
            dropped=rep.dropped,
            actions=rep.n_actions,
            distinct_constraints=rep.distinct_constraints,
            warnings=[str(w.message) for w in caught],
        )

    @app.post("/v1/synthetic", response_model=S.SyntheticResponse)
    def synthetic(req: S.SyntheticRequest):
        taxonomy = builtin_taxonomy()
        modes = sum((req.spec_path is not None, req.corpus_scale, req.random is not None))
        if modes > 1:
            raise DataError("pick one of spec_path, corpus_scale, random")
        if req.spec_path:
            spec = spec_from_json(_read_text(req.spec_path))
        elif req.corpus_scale:
            spec = make_corpus_scale_spec(req.seed, taxonomy)
        else:
            p = req.random or S.RandomSpecParams()
            spec = make_random_spec(
                n_actions=p.actions,
                n_objects=p.objects,
                total_instances=p.instances,
                label_noise=p.label_noise,
                seed=req.seed,
                grasp_alphabet_size=p.grasp_alphabet,
                dimension_alphabet_size=p.dimension_alphabet,
                constraint_alphabet_size=p.constraint_alphabet,
                values_per_attribute=p.values_per_attribute,
                taxonomy=taxonomy,
            )
        instances = generate_synthetic(spec, req.seed, taxonomy)
        save_instances(instances, req.out_path)
        if req.save_spec_path:
            with open(req.save_spec_path, "w", encoding="utf-8") as fh:
                fh.write(spec_to_json(spec))
        return S.SyntheticResponse(
            out_path=req.out_path,
            instances=len(instances),
            actions=len({i.action_label for i in instances}),
            sequences=len({i.sequence_id for i in instances}),
            spec_path=req.save_spec_path,
        )

    @app.post("/v1/encode", response_model=S.EncodeResponse)
    def encode(req: S.EncodeRequest):
        taxonomy = builtin_taxonomy()
        instances = load_instances(req.instances_path, taxonomy)
        if req.level == "sequence":
            if req.target != "action":
                raise DataError("sequence vectors predict actions only")
            seqs = group_sequences(instances)
            X, y = encode_sequence_matrix(
                seqs, taxonomy, object_vocab(instances), req.variant
            )
        elif req.level == "instance":
            vocab = build_vocab(instances, req.subset, taxonomy)
            X, y = encode_matrix(instances, vocab, req.target)
        else:
            raise DataError(f"unknown level {req.level!r}")
        save_matrix(X, y, req.out_path)
        return S.EncodeResponse(
            out_path=req.out_path, rows=X.shape[0], cols=X.shape[1], classes=len(set(y))
        )

    @app.post("/v1/train", response_model=S.TrainResponse)
    def train(req: S.TrainRequest):
        X, y = load_matrix(req.matrix_path)
        cfg = TrainConfig.from_dict(req.config)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            model = fit_classifier(X, y, req.classifier, cfg, req.seed)
        save_model(model, req.model_path)
        return S.TrainResponse(
            model_path=req.model_path,
            classifier=req.classifier,
            classes=len(model.classes),
            rows=X.shape[0],
            warnings=[str(w.message) for w in caught],
        )

    @app.post("/v1/predict", response_model=S.PredictResponse)
    def predict(req: S.PredictRequest):
        X, y = load_matrix(req.matrix_path)
        model = load_model(req.model_path)
        labels, conf = predict_with_confidence(model, X)
        acc = accuracy(y, labels)
        if req.out_path:
            with open(req.out_path, "w", encoding="utf-8") as fh:
                for lab, c in zip(labels, conf):
                    fh.write(f"{lab}\t{repr(float(c))}\n")
            return S.PredictResponse(rows=len(labels), accuracy=acc, out_path=req.out_path)
        return S.PredictResponse(rows=len(labels), accuracy=acc, labels=labels)

    @app.post("/v1/bench", response_model=S.BenchResponse)
    def bench(req: S.BenchRequest):
        taxonomy = builtin_taxonomy()
        instances = load_instances(req.instances_path, taxonomy)
        grid = load_grid(req.grid_path) if req.grid_path else builtin_grid()
        t0 = time.perf_counter()
        result = run_grid(
            instances, grid, threads=req.threads, sections=req.sections, taxonomy=taxonomy
        )
        seconds = time.perf_counter() - t0
        save_results(result, req.out_path)
        return S.BenchResponse(
            out_path=req.out_path,
            grid=result.name,
            seed=result.seed,
            cells=[S.CellBody(**c.to_dict()) for c in result.cells],
            failures=result.failures,
            seconds=seconds,
        )

    @app.post("/v1/report", response_model=S.ReportResponse)
    def report(req: S.ReportRequest):
        result = load_results(req.results_path)
        write_report(result, req.markdown_path, req.csv_path)
        return S.ReportResponse(
            markdown_path=req.markdown_path,
            csv_path=req.csv_path,
            cells=len(result.cells),
            failures=len(result.failures),
        )

    return app
