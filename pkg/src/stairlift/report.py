"""Report artifacts: JSON summary, delimited outputs, text table, figures.

Every writer goes through an atomic write-temp-then-rename and produces
byte-identical output for identical inputs (figures included: the SVG
hash salt and metadata date are pinned).
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .balance import Dataset  # noqa: E402
from .domain import CLASS_NAMES, ActivityLabel, parse_label  # noqa: E402
from .errors import MissingColumnError  # noqa: E402
from .evaluation import AGGREGATE_KEYS, EvaluationReport  # noqa: E402
from .features import FeatureVector  # noqa: E402
from .windowing import Window  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "stairlift"

METRIC_ROWS = (
    ("accuracy", "Accuracy"),
    ("f1_micro", "F1-Score (Micro-Avg)"),
    ("f1_macro", "F1-Score (Macro-Avg)"),
    ("f1_weighted", "F1-Score (Weighted)"),
)


def atomic_write_text(path: Union[str, Path], text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)


def run_label(window_s: float, imu_only: bool) -> str:
    return f"{window_s:g}s_{'imu' if imu_only else 'press'}"


def summary_dict(report: EvaluationReport) -> dict:
    return {
        "schema_version": 1,
        "window_s": report.window_s,
        "stride_s": report.stride_s,
        "imu_only": report.imu_only,
        "seed": report.seed,
        "grid": [
            {"max_depth": c.max_depth, "n_estimators": c.n_estimators} for c in report.grid
        ],
        "class_names": list(CLASS_NAMES),
        "feature_names": list(report.feature_names),
        "per_participant": [
            {
                "participant_id": f.participant_id,
                "accuracy": f.metrics.accuracy,
                "f1_micro": f.metrics.f1_micro,
                "f1_macro": f.metrics.f1_macro,
                "f1_weighted": f.metrics.f1_weighted,
                "max_depth": f.hyperparams.max_depth,
                "n_estimators": f.hyperparams.n_estimators,
                "support": f.metrics.support.tolist(),
                "confusion": f.metrics.confusion.tolist(),
            }
            for f in report.folds
        ],
        "aggregate": {k: report.aggregate[k] for k in AGGREGATE_KEYS},
        "total_confusion": report.total_confusion.tolist(),
        "mean_importances": dict(
            zip(report.feature_names, (float(v) for v in report.mean_importances))
        ),
    }


def write_summary_json(report: EvaluationReport, path: Union[str, Path]) -> None:
    atomic_write_text(path, json.dumps(summary_dict(report), indent=2) + "\n")


def load_summary(path: Union[str, Path]) -> dict:
    with open(path, "r", encoding="utf-8") as fp:
        doc = json.load(fp)
    if doc.get("schema_version") != 1:
        raise ValueError(f"unsupported summary schema in {path}")
    return doc


def confusion_csv_text(matrix: np.ndarray, class_names: Sequence[str] = CLASS_NAMES) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["truth\\prediction", *class_names])
    for i, name in enumerate(class_names):
        writer.writerow([name, *(int(v) for v in matrix[i])])
    return buf.getvalue()


def write_confusion_csv(matrix: np.ndarray, path: Union[str, Path]) -> None:
    atomic_write_text(path, confusion_csv_text(matrix))


def importance_csv_text(names: Sequence[str], scores: Sequence[float]) -> str:
    order = sorted(range(len(names)), key=lambda i: (-float(scores[i]), i))
    buf = io.StringIO()
    buf.write("feature,importance\n")
    for i in order:
        buf.write(f"{names[i]},{float(scores[i])!r}\n")
    return buf.getvalue()


def write_importance_csv(
    names: Sequence[str], scores: Sequence[float], path: Union[str, Path]
) -> None:
    atomic_write_text(path, importance_csv_text(names, scores))


def metrics_table_text(columns: Sequence[tuple[str, dict]]) -> str:
    """Plain-text metrics table, one column per evaluation run."""
    width = max((len(t) for t, _ in columns), default=8)
    width = max(width, 8)
    label_w = max(len(label) for _, label in METRIC_ROWS)
    lines = []
    header = "Metric".ljust(label_w)
    for title, _ in columns:
        header += " | " + title.rjust(width)
    lines.append(header)
    lines.append("-" * len(header))
    for key, label in METRIC_ROWS:
        row = label.ljust(label_w)
        for _, agg in columns:
            row += " | " + f"{agg[key]:.3f}".rjust(width)
        lines.append(row)
    return "\n".join(lines) + "\n"


def write_metrics_table(columns: Sequence[tuple[str, dict]], path: Union[str, Path]) -> None:
    atomic_write_text(path, metrics_table_text(columns))


def _save_svg(fig, path: Union[str, Path]) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())


def plot_confusion(
    matrix: np.ndarray,
    path: Union[str, Path],
    class_names: Sequence[str] = CLASS_NAMES,
    title: str = "Confusion matrix",
) -> None:
    matrix = np.asarray(matrix)
    fig, ax = plt.subplots(figsize=(6.4, 5.4))
    im = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(class_names)), class_names, rotation=30, ha="right")
    ax.set_yticks(range(len(class_names)), class_names)
    ax.set_xlabel("Predicted")
    ax.set_ylabel("True")
    ax.set_title(title)
    threshold = matrix.max() / 2 if matrix.max() > 0 else 0.5
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(
                j,
                i,
                str(int(matrix[i, j])),
                ha="center",
                va="center",
                color="white" if matrix[i, j] > threshold else "black",
                fontsize=9,
            )
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    _save_svg(fig, path)


def plot_importances(
    names: Sequence[str],
    scores: Sequence[float],
    path: Union[str, Path],
    title: str = "Feature importance (mean decrease in impurity)",
) -> None:
    order = sorted(range(len(names)), key=lambda i: (float(scores[i]), -i))
    fig, ax = plt.subplots(figsize=(7.0, 0.28 * len(names) + 1.2))
    ax.barh(
        range(len(order)),
        [float(scores[i]) for i in order],
        color="#3b6ea5",
    )
    ax.set_yticks(range(len(order)), [names[i] for i in order], fontsize=8)
    ax.set_xlabel("importance")
    ax.set_title(title)
    fig.tight_layout()
    _save_svg(fig, path)


def render_report_files(report: EvaluationReport, out_dir: Union[str, Path]) -> list[Path]:
    """Write the full artifact set for one evaluation run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    label = run_label(report.window_s, report.imu_only)
    paths = [
        out / "summary.json",
        out / "confusion.csv",
        out / "feature_importance.csv",
        out / "metrics_table.txt",
        out / "confusion.svg",
        out / "feature_importance.svg",
    ]
    write_summary_json(report, paths[0])
    write_confusion_csv(report.total_confusion, paths[1])
    write_importance_csv(report.feature_names, report.mean_importances, paths[2])
    write_metrics_table([(label, report.aggregate)], paths[3])
    plot_confusion(
        report.total_confusion, paths[4], title=f"Confusion matrix ({label})"
    )
    plot_importances(report.feature_names, report.mean_importances, paths[5])
    return paths


# --- features / windows delimited files ------------------------------------


def features_csv_text(data: Dataset) -> str:
    buf = io.StringIO()
    buf.write("participant_id,start_ms," + ",".join(data.feature_names) + ",label\n")
    for i in range(len(data)):
        values = ",".join(repr(float(v)) for v in data.X[i])
        label = ActivityLabel(int(data.y[i])).canonical_name
        buf.write(f"{data.participant_ids[i]},{int(data.start_ms[i])},{values},{label}\n")
    return buf.getvalue()


def write_features_csv(data: Dataset, path: Union[str, Path]) -> None:
    atomic_write_text(path, features_csv_text(data))


def read_features_csv(path: Union[str, Path]) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if not header or header[0] != "participant_id" or header[-1] != "label":
            raise MissingColumnError(f"not a features CSV: {path}")
        names = tuple(header[2:-1])
        vectors = []
        for row in reader:
            vectors.append(
                FeatureVector(
                    participant_id=row[0],
                    start_ms=int(row[1]),
                    values=np.array([float(v) for v in row[2:-1]], dtype=np.float64),
                    label=parse_label(row[-1]),
                )
            )
    return Dataset.from_vectors(vectors, names)


def windows_csv_text(windows: Sequence[Window]) -> str:
    buf = io.StringIO()
    buf.write("participant_id,start_ms,end_ms,label,sample_count\n")
    for w in windows:
        label = "" if w.label is None else w.label.canonical_name
        buf.write(f"{w.participant_id},{w.start_ms},{w.end_ms},{label},{w.sample_count}\n")
    return buf.getvalue()


def write_windows_csv(windows: Sequence[Window], path: Union[str, Path]) -> None:
    atomic_write_text(path, windows_csv_text(windows))
