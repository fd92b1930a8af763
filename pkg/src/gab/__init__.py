"""Grasp-attribute benchmark: data pipeline, classifiers, evaluation grid."""

__version__ = "0.1.0"

from .core import (
    ALL_CONSTRAINTS,
    COARSE_CLASSES,
    CSV_COLUMNS,
    FORCE_CLASSES,
    OPPOSITION_TYPES,
    DataError,
    GabError,
    Instance,
    Taxonomy,
    ValidationError,
    builtin_taxonomy,
    validate_instance,
)
from .ingest import clean, exclude_objects, load_instances, parse_csv, save_instances
from .synth import (
    SyntheticSpec,
    generate_synthetic,
    make_corpus_scale_spec,
    make_random_spec,
    spec_from_json,
    spec_to_json,
)
from .encode import (
    ATTRIBUTES,
    SEQUENCE_VARIANTS,
    TARGETS,
    Vocabulary,
    build_vocab,
    encode_matrix,
    encode_sequence_matrix,
    group_sequences,
    load_matrix,
    save_matrix,
)
from .learn import (
    CLASSIFIER_KINDS,
    BoostConfig,
    ForestConfig,
    MlpConfig,
    SvmConfig,
    TrainConfig,
    load_model,
    save_model,
    train_boost,
    train_forest,
    train_mlp,
    train_svm,
)
from .ovo import (  # noqa: F401  (importing registers the pair-model kinds)
    OvoModel,
    OvoPrediction,
    decide_votes,
    ensemble_vote,
    train_ovo,
    train_ovo_packed,
)
from .bench import (
    Grid,
    GridResult,
    accuracy,
    builtin_grid,
    fit_classifier,
    load_grid,
    load_results,
    predict_with_confidence,
    run_grid,
    save_results,
    stratified_two_fold,
)
from .report import render_csv, render_markdown, write_report

__all__ = [
    "__version__",
    "ALL_CONSTRAINTS", "COARSE_CLASSES", "CSV_COLUMNS", "FORCE_CLASSES",
    "OPPOSITION_TYPES", "DataError", "GabError", "Instance", "Taxonomy",
    "ValidationError", "builtin_taxonomy", "validate_instance",
    "clean", "exclude_objects", "load_instances", "parse_csv", "save_instances",
    "SyntheticSpec", "generate_synthetic", "make_corpus_scale_spec",
    "make_random_spec", "spec_from_json", "spec_to_json",
    "ATTRIBUTES", "SEQUENCE_VARIANTS", "TARGETS", "Vocabulary", "build_vocab",
    "encode_matrix", "encode_sequence_matrix", "group_sequences",
    "load_matrix", "save_matrix",
    "CLASSIFIER_KINDS", "BoostConfig", "ForestConfig", "MlpConfig", "SvmConfig",
    "TrainConfig", "load_model", "save_model",
    "train_boost", "train_forest", "train_mlp", "train_svm",
    "OvoModel", "OvoPrediction", "decide_votes", "ensemble_vote",
    "train_ovo", "train_ovo_packed",
    "Grid", "GridResult", "accuracy", "builtin_grid", "fit_classifier",
    "load_grid", "load_results", "predict_with_confidence", "run_grid",
    "save_results", "stratified_two_fold",
    "render_csv", "render_markdown", "write_report",
]
