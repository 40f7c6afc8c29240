"""Command line: synth, extract, train, loso, importance, report.

Settings resolve with precedence flags > config file > environment >
defaults; the effective configuration is echoed at the start of every run
so results are auditable. All outputs are written atomically under the
requested output directory, and every command is deterministic given its
flags and seed.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import report as report_mod
from .balance import Dataset, random_oversample
from .domain import Recording
from .errors import StairliftError
from .evaluation import drop_pressure_features, run_loso
from .features import FEATURE_NAMES, extract_features
from .forest import (
    ForestHyperparams,
    GRID_DEPTHS,
    GRID_ESTIMATORS,
    default_grid,
    feature_importances,
    grid_search,
    load_forest,
    predict_many,
    save_forest,
    train_forest,
)
from .ingest import (
    apply_annotations,
    parse_annotation_csv,
    parse_sensor_csv,
    resample_uniform,
    write_sensor_csv,
)
from .synth import SynthConfig, generate_cohort
from .windowing import count_candidates, segment

ENV_DATA_DIR = "STAIRLIFT_DATA_DIR"

logger = logging.getLogger("stairlift")


@dataclass
class RunConfig:
    """Resolved settings for a pipeline run."""

    data_dir: Optional[Path] = None
    out: Optional[Path] = None
    window_s: float = 8.0
    stride_s: Optional[float] = None
    coverage: float = 0.80
    imu_only: bool = False
    seed: int = 42
    resample_hz: Optional[float] = None
    grid: list[ForestHyperparams] = field(default_factory=default_grid)
    columns: dict[str, str] = field(default_factory=dict)


def _load_config_file(path: Optional[str]) -> dict[str, str]:
    if not path:
        return {}
    out: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise StairliftError(f"bad config line (expected KEY=VALUE): {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_grid(depths: str, estimators: str) -> list[ForestHyperparams]:
    depth_vals = []
    for tok in depths.split(","):
        tok = tok.strip().lower()
        depth_vals.append(None if tok in ("none", "unbounded") else int(tok))
    est_vals = [int(tok) for tok in estimators.split(",")]
    return [ForestHyperparams(d, n) for d in depth_vals for n in est_vals]


class _Resolver:
    """flags > config file > environment > defaults."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.cfg = _load_config_file(getattr(args, "config", None))

    def get(self, name: str, default, cast=str):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        if name in self.cfg:
            raw = self.cfg[name]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            return cast(raw)
        return default

    def data_dir(self) -> Path:
        value = self.get("data", None)
        if value is None:
            value = os.environ.get(ENV_DATA_DIR)
        if value is None:
            raise StairliftError(
                f"no data directory: pass --data, set {ENV_DATA_DIR}, or use a config file"
            )
        return Path(value)

    def columns(self) -> dict[str, str]:
        return {
            key[len("column_") :]: value
            for key, value in self.cfg.items()
            if key.startswith("column_")
        }

    def grid(self) -> list[ForestHyperparams]:
        depths = self.get("grid_depths", ",".join("none" if d is None else str(d) for d in GRID_DEPTHS))
        ests = self.get("grid_estimators", ",".join(str(n) for n in GRID_ESTIMATORS))
        return _parse_grid(depths, ests)


def _print_effective(config: dict) -> None:
    for key in config:
        print(f"# {key} = {config[key]}")


def _load_recordings(run: RunConfig) -> list[Recording]:
    files = sorted(p for p in run.data_dir.glob("*.csv") if not p.name.endswith("_annotation.csv"))
    if not files:
        raise StairliftError(f"no sensor CSV files under {run.data_dir}")
    recordings = []
    for path in files:
        with open(path, "rb") as fp:
            rec = parse_sensor_csv(fp, participant_id=path.stem, columns=run.columns)
        annotation = path.with_name(path.stem + "_annotation.csv")
        if annotation.exists():
            with open(annotation, "rb") as fp:
                rec = apply_annotations(rec, parse_annotation_csv(fp))
        if run.resample_hz:
            rec = resample_uniform(rec, run.resample_hz)
        if rec.magnitude_mismatches:
            logger.warning(
                "%s: %d rows with magnitude mismatches (recomputed)",
                path.name,
                rec.magnitude_mismatches,
            )
        recordings.append(rec)
    return recordings


def _build_dataset(run: RunConfig, report_counts: bool = True):
    recordings = _load_recordings(run)
    vectors = []
    all_windows = []
    kept = discarded = 0
    for rec in recordings:
        windows = segment(
            rec, run.window_s, run.stride_s, coverage_threshold=run.coverage
        )
        candidates = count_candidates(rec, run.window_s, run.stride_s)
        kept += len(windows)
        discarded += candidates - len(windows)
        all_windows.extend(windows)
        vectors.extend(extract_features(w) for w in windows)
        if report_counts:
            print(
                f"{rec.participant_id}: windows kept={len(windows)} "
                f"discarded={candidates - len(windows)}"
            )
    if report_counts:
        print(f"total: windows kept={kept} discarded={discarded}")
    data = Dataset.from_vectors(vectors, FEATURE_NAMES)
    return data, all_windows


# --- subcommands ------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    participants = res.get("participants", 20, int)
    seed = res.get("seed", 42, int)
    minutes = res.get("minutes", 30.0, float)
    rate = res.get("rate", 50.0, float)
    out_dir = Path(res.get("out", "data"))
    _print_effective(
        {"command": "synth", "participants": participants, "seed": seed,
         "session_minutes": minutes, "rate_hz": rate, "out": out_dir}
    )

    config = SynthConfig(session_minutes=minutes, rate_hz=rate, seed=seed)
    recordings = generate_cohort(participants, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for rec in recordings:
        buf = io.StringIO()
        write_sensor_csv(rec, buf)
        name = f"{rec.participant_id}.csv"
        report_mod.atomic_write_text(out_dir / name, buf.getvalue())
        files.append(name)
        print(f"wrote {out_dir / name} ({len(rec)} samples)")
    manifest = {
        "generator": "stairlift-synth",
        "participants": files,
        "seed": seed,
        "session_minutes": minutes,
        "rate_hz": rate,
    }
    report_mod.atomic_write_text(
        out_dir / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    print(f"wrote {out_dir / 'manifest.json'}")
    return 0


def _run_config(res: _Resolver, need_out: bool = True) -> RunConfig:
    run = RunConfig(
        data_dir=res.data_dir(),
        out=Path(res.get("out", "out")) if need_out else None,
        window_s=res.get("window", 8.0, float),
        stride_s=res.get("stride", None, float),
        coverage=res.get("coverage", 0.80, float),
        imu_only=bool(res.get("imu_only", False, bool)),
        seed=res.get("seed", 42, int),
        resample_hz=res.get("resample", None, float),
        grid=res.grid(),
        columns=res.columns(),
    )
    return run


def cmd_extract(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    run = _run_config(res)
    _print_effective(
        {"command": "extract", "data": run.data_dir, "window_s": run.window_s,
         "stride_s": run.stride_s or run.window_s, "coverage": run.coverage,
         "resample_hz": run.resample_hz, "out": run.out}
    )
    data, windows = _build_dataset(run)
    if run.imu_only:
        data = drop_pressure_features(data)
    run.out.parent.mkdir(parents=True, exist_ok=True)
    report_mod.write_features_csv(data, run.out)
    print(f"wrote {run.out} ({len(data)} feature rows)")
    if getattr(args, "dump_windows", None):
        report_mod.write_windows_csv(windows, args.dump_windows)
        print(f"wrote {args.dump_windows}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    seed = res.get("seed", 42, int)
    features_path = Path(res.get("features", "features.csv"))
    out_path = Path(res.get("out", "model.json"))
    imu_only = bool(res.get("imu_only", False, bool))
    _print_effective(
        {"command": "train", "features": features_path, "seed": seed,
         "imu_only": imu_only, "out": out_path}
    )
    data = report_mod.read_features_csv(features_path)
    if imu_only:
        data = drop_pressure_features(data)
    if args.max_depth is not None or args.n_estimators is not None:
        depth = None if args.max_depth in (None, 0) else args.max_depth
        best = ForestHyperparams(depth, args.n_estimators or 300)
        print(f"hyperparameters fixed: depth={best.max_depth} trees={best.n_estimators}")
    else:
        best = grid_search(data, res.grid(), k=res.get("cv_folds", 10, int), seed=seed)
        print(f"grid search chose: depth={best.max_depth} trees={best.n_estimators}")
    balanced = random_oversample(data, seed=seed)
    forest = train_forest(balanced, best, seed=seed)
    train_acc = float(np.mean(predict_many(forest, data.X) == data.y))
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_forest(forest, out_path)
    print(f"wrote {out_path} (training accuracy {train_acc:.3f})")
    return 0


def cmd_loso(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    run = _run_config(res)
    _print_effective(
        {"command": "loso", "data": run.data_dir, "window_s": run.window_s,
         "stride_s": run.stride_s or run.window_s, "coverage": run.coverage,
         "imu_only": run.imu_only, "seed": run.seed, "out": run.out,
         "grid_cells": len(run.grid)}
    )
    data, _ = _build_dataset(run)
    report = run_loso(
        data,
        grid=run.grid,
        window_s=run.window_s,
        stride_s=run.stride_s,
        seed=run.seed,
        imu_only=run.imu_only,
        cv_folds=res.get("cv_folds", 10, int),
    )
    paths = report_mod.render_report_files(report, run.out)
    for key, value in report.aggregate.items():
        print(f"aggregate {key}: {value:.4f}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_importance(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    model_path = Path(res.get("model", "model.json"))
    out_dir = Path(res.get("out", "out"))
    _print_effective({"command": "importance", "model": model_path, "out": out_dir})
    forest = load_forest(model_path)
    scores = feature_importances(forest)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "feature_importance.csv"
    svg_path = out_dir / "feature_importance.svg"
    report_mod.write_importance_csv(forest.feature_names, scores, csv_path)
    report_mod.plot_importances(forest.feature_names, scores, svg_path)
    print(f"wrote {csv_path}")
    print(f"wrote {svg_path}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    res = _Resolver(args)
    out_dir = Path(res.get("out", "out"))
    _print_effective({"command": "report", "summaries": args.summary, "out": out_dir})
    out_dir.mkdir(parents=True, exist_ok=True)
    columns = []
    written = []
    for path in args.summary:
        doc = report_mod.load_summary(path)
        label = report_mod.run_label(doc["window_s"], doc["imu_only"])
        columns.append((label, doc["aggregate"]))
        conf = np.asarray(doc["total_confusion"], dtype=np.int64)
        names = list(doc["mean_importances"].keys())
        scores = list(doc["mean_importances"].values())
        conf_csv = out_dir / f"confusion_{label}.csv"
        conf_svg = out_dir / f"confusion_{label}.svg"
        imp_csv = out_dir / f"feature_importance_{label}.csv"
        imp_svg = out_dir / f"feature_importance_{label}.svg"
        report_mod.write_confusion_csv(conf, conf_csv)
        report_mod.plot_confusion(conf, conf_svg, title=f"Confusion matrix ({label})")
        report_mod.write_importance_csv(names, scores, imp_csv)
        report_mod.plot_importances(names, scores, imp_svg)
        written += [conf_csv, conf_svg, imp_csv, imp_svg]
    table_path = out_dir / "metrics_table.txt"
    report_mod.write_metrics_table(columns, table_path)
    written.append(table_path)
    for path in written:
        print(f"wrote {path}")
    return 0


# --- parser -----------------------------------------------------------------


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stairlift",
        description="Stairs vs. lift activity classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="KEY=VALUE config file")
        p.add_argument("--seed", type=int, help="master RNG seed (default 42)")

    p = sub.add_parser("synth", help="generate a synthetic labeled cohort")
    common(p)
    p.add_argument("--participants", type=_positive_int, help="cohort size (default 20)")
    p.add_argument("--minutes", type=float, help="session length in minutes (default 30)")
    p.add_argument("--rate", type=float, help="sample rate in Hz (default 50)")
    p.add_argument("--out", help="output directory (default data)")
    p.set_defaults(func=cmd_synth)

    def pipeline_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--data", help=f"sensor CSV directory (or ${ENV_DATA_DIR})")
        p.add_argument("--window", type=float, help="window length in seconds (default 8)")
        p.add_argument("--stride", type=float, help="stride in seconds (default: window)")
        p.add_argument("--coverage", type=float, help="label coverage threshold (default 0.8)")
        p.add_argument("--resample", type=float, help="resample to this rate before windowing")

    p = sub.add_parser("extract", help="windows + features to a CSV")
    common(p)
    pipeline_flags(p)
    p.add_argument("--imu-only", dest="imu_only", action="store_const", const=True)
    p.add_argument("--out", help="features CSV path")
    p.add_argument("--dump-windows", help="also write a window audit CSV here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit a forest on a features CSV")
    common(p)
    p.add_argument("--features", help="features CSV from `extract`")
    p.add_argument("--imu-only", dest="imu_only", action="store_const", const=True)
    p.add_argument("--max-depth", type=int, help="fix depth (0 = unbounded) instead of grid search")
    p.add_argument("--n-estimators", type=int, help="fix tree count instead of grid search")
    p.add_argument("--grid-depths", help="grid depths, e.g. 15,20,none")
    p.add_argument("--grid-estimators", help="grid tree counts, e.g. 200,225,250")
    p.add_argument("--cv-folds", type=int, help="grid-search CV folds (default 10)")
    p.add_argument("--out", help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loso", help="leave-one-subject-out evaluation")
    common(p)
    pipeline_flags(p)
    p.add_argument("--imu-only", dest="imu_only", action="store_const", const=True,
                   help="drop the six pressure features (ablation)")
    p.add_argument("--grid-depths", help="grid depths, e.g. 15,20,none")
    p.add_argument("--grid-estimators", help="grid tree counts, e.g. 200,225,250")
    p.add_argument("--cv-folds", type=int, help="grid-search CV folds (default 10)")
    p.add_argument("--out", help="report directory")
    p.set_defaults(func=cmd_loso)

    p = sub.add_parser("importance", help="importance CSV + chart from a saved model")
    common(p)
    p.add_argument("--model", help="model JSON from `train`")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("report", help="combined table + figures from run summaries")
    common(p)
    p.add_argument("--summary", nargs="+", required=True, help="summary.json files")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StairliftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
