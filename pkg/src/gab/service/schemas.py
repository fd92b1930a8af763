"""Request and response bodies for the HTTP service.

Every operation works on files the server can reach: requests name the
inputs and where to write the outputs, responses carry summaries. This
keeps large matrices and model blobs out of JSON bodies; the CLI is a thin
client over these models.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..encode import SEQUENCE_VARIANTS


class ErrorBody(BaseModel):
    kind: str
    message: str
    field: str | None = None


class ErrorEnvelope(BaseModel):
    error: ErrorBody


class HealthResponse(BaseModel):
    status: str
    version: str


class IngestRequest(BaseModel):
    csv_path: str
    out_path: str
    exclude_objects: list[str] = Field(default_factory=list)


class IngestResponse(BaseModel):
    out_path: str
    total: int
    kept: int
    dropped: dict[str, int]
    actions: int
    distinct_constraints: int
    warnings: list[str] = Field(default_factory=list)


class RandomSpecParams(BaseModel):
    actions: int = 40
    objects: int = 12
    instances: int = 800
    label_noise: float = 0.05
    grasp_alphabet: int = 8
    dimension_alphabet: int = 4
    constraint_alphabet: int = 6
    values_per_attribute: int = 2


class SyntheticRequest(BaseModel):
    out_path: str
    seed: int = 0
    spec_path: str | None = None       # generate from a saved spec file
    corpus_scale: bool = False          # published corpus shape
    random: RandomSpecParams | None = None
    save_spec_path: str | None = None


class SyntheticResponse(BaseModel):
    out_path: str
    instances: int
    actions: int
    sequences: int
    spec_path: str | None = None


class EncodeRequest(BaseModel):
    instances_path: str
    out_path: str
    level: str = "instance"
    subset: list[str] = Field(default_factory=lambda: ["object", "grasp_fine"])
    variant: str = SEQUENCE_VARIANTS[0]
    target: str = "action"


class EncodeResponse(BaseModel):
    out_path: str
    rows: int
    cols: int
    classes: int


class TrainRequest(BaseModel):
    matrix_path: str
    model_path: str
    classifier: str
    config: dict = Field(default_factory=dict)
    seed: int = 0


class TrainResponse(BaseModel):
    model_path: str
    classifier: str
    classes: int
    rows: int
    warnings: list[str] = Field(default_factory=list)


class PredictRequest(BaseModel):
    matrix_path: str
    model_path: str
    out_path: str | None = None  # one "label<TAB>confidence" line per row


class PredictResponse(BaseModel):
    rows: int
    accuracy: float
    labels: list[str] | None = None  # inline unless written to out_path
    out_path: str | None = None


class BenchRequest(BaseModel):
    instances_path: str
    out_path: str
    grid_path: str | None = None  # default: packaged grid
    sections: list[str] | None = None
    threads: int | None = None


class CellBody(BaseModel):
    section: str
    column: str
    row: str
    kind: str
    target: str
    rows: int
    classes: int
    fold_ab: float
    fold_ba: float
    accuracy: float
    pooled: float


class BenchResponse(BaseModel):
    out_path: str
    grid: str
    seed: int
    cells: list[CellBody]
    failures: list[dict]
    seconds: float


class ReportRequest(BaseModel):
    results_path: str
    markdown_path: str
    csv_path: str


class ReportResponse(BaseModel):
    markdown_path: str
    csv_path: str
    cells: int
    failures: int
