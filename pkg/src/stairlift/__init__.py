"""Stairs vs. lift activity classification from accelerometer + barometer logs."""

from .balance import Dataset, random_oversample
from .domain import (
    ActivityLabel,
    CLASS_NAMES,
    Recording,
    SensorSample,
    compute_magnitude,
    parse_label,
)
from .evaluation import EvaluationReport, Metrics, compute_metrics, loso_splits, run_loso
from .features import (
    FEATURE_NAMES,
    IMU_FEATURE_NAMES,
    FeatureVector,
    ablate_pressure,
    extract_features,
    kurtosis,
    skewness,
    slope,
)
from .forest import (
    ForestHyperparams,
    TrainedForest,
    default_grid,
    feature_importances,
    grid_search,
    load_forest,
    predict,
    predict_many,
    save_forest,
    train_forest,
)
from .ingest import (
    AnnotationEvent,
    apply_annotations,
    parse_annotation_csv,
    parse_sensor_csv,
    resample_uniform,
)
from .synth import SynthConfig, generate_cohort, generate_session
from .windowing import Window, resolve_label, segment

__version__ = "0.1.0"

__all__ = [
    "ActivityLabel",
    "AnnotationEvent",
    "CLASS_NAMES",
    "Dataset",
    "EvaluationReport",
    "FEATURE_NAMES",
    "FeatureVector",
    "ForestHyperparams",
    "IMU_FEATURE_NAMES",
    "Metrics",
    "Recording",
    "SensorSample",
    "SynthConfig",
    "TrainedForest",
    "Window",
    "ablate_pressure",
    "apply_annotations",
    "compute_magnitude",
    "compute_metrics",
    "default_grid",
    "extract_features",
    "feature_importances",
    "generate_cohort",
    "generate_session",
    "grid_search",
    "kurtosis",
    "load_forest",
    "loso_splits",
    "parse_annotation_csv",
    "parse_label",
    "parse_sensor_csv",
    "predict",
    "predict_many",
    "random_oversample",
    "resample_uniform",
    "resolve_label",
    "run_loso",
    "save_forest",
    "skewness",
    "slope",
    "segment",
    "train_forest",
]
