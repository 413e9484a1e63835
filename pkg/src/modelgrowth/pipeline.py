"""The mine -> measure -> forecast -> evaluate -> compare pipeline.

Every stage reads its predecessor's files from the output directory, so a
full run and a sequence of single-stage invocations produce the same files.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig
from .evaluation import (
    METRICS,
    EvaluationError,
    approach_sort_key,
    compare_approaches,
    evaluate_model,
    read_evaluation_csv,
    threshold_counts,
    write_evaluation_csv,
)
from .forecasters import ForecasterError, ForecasterSpec, fit_forecaster
from .mining import (
    MiningError,
    group_records,
    list_model_revisions,
    measure_revisions,
    read_history_csv,
    read_revisions_csv,
    write_history_csv,
    write_revisions_csv,
)
from .seeding import stable_seed
from .timeseries import SeriesError, UnevenSeries, split_by_dates, to_daily, utc_day

log = logging.getLogger(__name__)

STAGES = ("mine", "measure", "forecast", "evaluate", "compare")
HISTORY = "history.csv"
REVISIONS = "revisions.csv"
FORECASTS = "forecasts.csv"
FITTED = "fitted_models.json"
EVALUATION = "evaluation.csv"
THRESHOLDS = "threshold_summary.csv"
COMPARISON = "comparison.json"
RMSE_PLOT = "rmse_by_model.csv"
MANIFEST = "manifest.json"
SERIES_DIR = "series"
FORECAST_COLUMNS = ("model_id", "metric", "approach", "step", "date", "forecast", "truth")

EXIT_OK, EXIT_THRESHOLD, EXIT_FATAL = 0, 1, 2


class PipelineError(RuntimeError):
    pass


@dataclass
class RunManifest:
    config_hash: str
    version: str = __version__
    stages: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    exclusions: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)
    failed_stage: str | None = None
    reason: str | None = None
    exit_code: int = EXIT_OK

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2) + "\n"


def _require(path: Path) -> Path:
    if not path.is_file():
        raise PipelineError(f"{path.name} not found (expected at {path})")
    return path


# ---------------------------------------------------------------- series

@dataclass(frozen=True)
class Segments:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    test_dates: list
    dates: list
    values: np.ndarray


def build_segments(records, metric: str, index: str, b1: dt.date, b2: dt.date) -> Segments:
    """Series for one model and metric, cut at the split boundaries.

    Revisions whose block parse failed are left out of the BC series.
    """
    if metric == "BC":
        records = [r for r in records if r.block_count >= 0]
    else:
        records = list(records)
    if not records:
        raise SeriesError("empty series")
    ts = np.array([r.timestamp for r in records], dtype=np.int64)
    vals = np.array([r.loc if metric == "LOC" else r.block_count for r in records], dtype=np.float64)
    if index == "daily":
        daily = to_daily(UnevenSeries(ts, vals))
        s = split_by_dates(daily, b1, b2)
        return Segments(s.train.values, s.validation.values, s.test.values,
                        s.test.dates(), daily.dates(), daily.values)
    days = [utc_day(t) for t in ts]
    if not days[0] <= b1 <= days[-1]:
        raise SeriesError(f"boundary b1={b1} outside series range {days[0]}..{days[-1]}")
    i1 = sum(d <= b1 for d in days)
    i2 = sum(d <= b2 for d in days)
    if i1 == len(days):
        raise SeriesError("empty segment: validation and test")
    if i2 == i1:
        raise SeriesError("empty segment: validation")
    if i2 == len(days):
        raise SeriesError("empty segment: test")
    return Segments(vals[:i1], vals[i1:i2], vals[i2:], days[i2:], days, vals)


def table_one(records, b1, b2) -> dict:
    """Revision counts per segment, with min/max/avg per model."""
    grouped = group_records(records)

    def stats(counts):
        counts = list(counts)
        if not counts:
            return {"total": 0, "min": 0, "max": 0, "avg": 0.0}
        return {"total": int(sum(counts)), "min": int(min(counts)), "max": int(max(counts)),
                "avg": round(float(np.mean(counts)), 3)}

    seg = {"all": [], "train": [], "validation": [], "test": []}
    for recs in grouped.values():
        days = [utc_day(r.timestamp) for r in recs]
        seg["all"].append(len(days))
        seg["train"].append(sum(d <= b1 for d in days))
        seg["validation"].append(sum(b1 < d <= b2 for d in days))
        seg["test"].append(sum(d > b2 for d in days))
    return {"models": len(grouped), "revisions": {k: stats(v) for k, v in seg.items()},
            "flagged_revisions": sum(r.flagged for r in records)}


def _series_name(model_id: str, metric: str) -> str:
    safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in model_id)
    return f"{safe}__{metric}.csv"


# ---------------------------------------------------------------- stages

def stage_mine(cfg: PipelineConfig, manifest: RunManifest) -> None:
    try:
        history = list_model_revisions(cfg.repo, with_content=False)
    except MiningError as exc:
        raise PipelineError(str(exc)) from exc
    if not history:
        raise PipelineError("no models matched")
    write_history_csv(history, cfg.out / HISTORY)
    manifest.counts["mined_models"] = len(history)
    manifest.counts["mined_revisions"] = sum(len(v) for v in history.values())


def stage_measure(cfg: PipelineConfig, manifest: RunManifest) -> None:
    history = read_history_csv(_require(cfg.out / HISTORY))
    if not history:
        raise PipelineError("no models matched")
    try:
        records = measure_revisions(history, cfg.repo, jobs=cfg.jobs)
    except (MiningError, OSError) as exc:
        raise PipelineError(f"measuring failed: {exc}") from exc
    write_revisions_csv(records, cfg.out / REVISIONS)
    manifest.counts.update(table_one(records, cfg.b1, cfg.b2))


def _fit_task(cfg, model_id, metric, approach, seg):
    spec = ForecasterSpec(approach, dict(cfg.grids.get(approach, {})),
                          stable_seed(cfg.seed, model_id, metric, approach), cfg.runs)
    history = np.concatenate((seg.train, seg.validation))
    fitted = fit_forecaster(spec, seg.train, seg.validation, refit_history=history)
    return spec.seed, fitted.summary(), fitted.forecast(seg.test.size)


def stage_forecast(cfg: PipelineConfig, manifest: RunManifest) -> None:
    records = read_revisions_csv(_require(cfg.out / REVISIONS))
    manifest.counts.update(table_one(records, cfg.b1, cfg.b2))
    grouped = group_records(records)
    series_dir = cfg.out / SERIES_DIR
    series_dir.mkdir(parents=True, exist_ok=True)
    jobs = []
    for model_id in sorted(grouped):
        recs = grouped[model_id]
        if len(recs) < cfg.min_revisions:
            manifest.exclusions.append({"model_id": model_id, "stage": "forecast",
                                        "reason": "fewer_than_min_revisions", "revisions": len(recs)})
            continue
        for metric in METRICS:
            try:
                seg = build_segments(recs, metric, cfg.index, cfg.b1, cfg.b2)
            except SeriesError as exc:
                manifest.exclusions.append({"model_id": model_id, "metric": metric, "stage": "forecast",
                                            "reason": "empty_segment", "detail": str(exc)})
                continue
            _write_series(series_dir / _series_name(model_id, metric), seg)
            jobs.append((model_id, metric, seg))
    tasks = [(m, metric, a, seg) for m, metric, seg in jobs for a in cfg.approaches]

    def run(task):
        m, metric, a, seg = task
        try:
            return _fit_task(cfg, m, metric, a, seg)
        except (ForecasterError, ValueError) as exc:
            return exc

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(run, tasks))
    else:
        results = [run(t) for t in tasks]

    by_series: dict = {}
    for (m, metric, a, seg), res in zip(tasks, results):
        by_series.setdefault((m, metric), []).append((a, seg, res))
    fitted_out = []
    rows = []
    for (m, metric), items in by_series.items():
        failed = [(a, r) for a, _, r in items if isinstance(r, Exception)]
        if failed:
            a, r = failed[0]
            manifest.exclusions.append({"model_id": m, "metric": metric, "stage": "forecast",
                                        "reason": "fit_failed", "approach": a, "detail": str(r)})
            continue
        for a, seg, (seed, summary, fc) in items:
            fitted_out.append({"model_id": m, "metric": metric, "approach": a, "seed": seed, **summary})
            for step, (day, f, t) in enumerate(zip(seg.test_dates, fc, seg.test), 1):
                rows.append([m, metric, a, step, day.isoformat(), repr(float(f)), repr(float(t))])
    if not rows:
        raise PipelineError("no series left to forecast after exclusions")
    with open(cfg.out / FORECASTS, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_COLUMNS)
        w.writerows(rows)
    (cfg.out / FITTED).write_text(json.dumps(fitted_out, indent=2) + "\n", encoding="utf-8")
    manifest.counts["forecast_series"] = len(fitted_out) // max(1, len(cfg.approaches))


def _write_series(path: Path, seg: Segments) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for day, v in zip(seg.dates, seg.values):
            w.writerow([day.isoformat(), repr(float(v))])


def read_forecasts_csv(path) -> dict:
    """``{(model_id, metric): (truth, {approach: forecast})}`` in file order."""
    out: dict = {}
    with open(_require(Path(path)), newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != FORECAST_COLUMNS:
            raise PipelineError(f"{path}: expected columns {','.join(FORECAST_COLUMNS)}")
        for row in reader:
            truth, preds = out.setdefault((row["model_id"], row["metric"]), ({}, {}))
            series = preds.setdefault(row["approach"], [])
            step = int(row["step"])
            if step != len(series) + 1:
                raise PipelineError(f"{path}: steps out of order for {row['model_id']}/{row['approach']}")
            series.append(float(row["forecast"]))
            truth[step] = float(row["truth"])
    return {k: (np.array([t[s] for s in sorted(t)]), p) for k, (t, p) in out.items()}


def stage_evaluate(cfg: PipelineConfig, manifest: RunManifest) -> bool:
    """Write evaluation files; True when any forecast breaks the threshold."""
    forecasts = read_forecasts_csv(cfg.out / FORECASTS)
    records = []
    for (model_id, metric), (truth, preds) in forecasts.items():
        try:
            records += evaluate_model(model_id, metric, preds, truth, cfg.policy, manifest.exclusions)
        except EvaluationError as exc:
            manifest.exclusions.append({"model_id": model_id, "metric": metric, "stage": "evaluate",
                                        "reason": "evaluation_error", "detail": str(exc)})
    write_evaluation_csv(records, cfg.out / EVALUATION)
    write_threshold_summary(records, cfg.policy, cfg.out / THRESHOLDS)
    above = sum(r.above_threshold for r in records)
    manifest.counts["evaluation_records"] = len(records)
    manifest.counts["above_threshold"] = above
    return above > 0


def write_threshold_summary(records, policy, path) -> None:
    """Table-style counts of models above the error threshold."""
    counts = threshold_counts(records)
    approaches = sorted({r.approach for r in records}, key=approach_sort_key)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "threshold_pct", *approaches])
        for metric, per in counts.items():
            w.writerow([metric, repr(policy.max_error_pct), *(per.get(a, 0) for a in approaches)])


def write_rmse_plot_data(records, path) -> None:
    """Grouped-bar layout: one row per model, metric and horizon."""
    approaches = sorted({r.approach for r in records}, key=approach_sort_key)
    table: dict = {}
    for r in records:
        table.setdefault((r.model_id, r.metric, "short"), {})[r.approach] = r.rmse_short
        table.setdefault((r.model_id, r.metric, "long"), {})[r.approach] = r.rmse_long
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model_id", "metric", "horizon", *approaches])
        for key in sorted(table, key=lambda k: (k[0], k[1], k[2] != "short")):
            vals = table[key]
            w.writerow([*key, *("" if vals.get(a) is None else repr(vals[a]) for a in approaches)])


def stage_compare(cfg: PipelineConfig, manifest: RunManifest) -> None:
    records = read_evaluation_csv(_require(cfg.out / EVALUATION))
    try:
        report = compare_approaches(records, cfg.policy, pairwise=cfg.pairwise)
    except EvaluationError as exc:
        raise PipelineError(str(exc)) from exc
    (cfg.out / COMPARISON).write_text(report.to_json(), encoding="utf-8")
    write_rmse_plot_data(records, cfg.out / RMSE_PLOT)


STAGE_FUNCS = {"mine": stage_mine, "measure": stage_measure, "forecast": stage_forecast,
               "evaluate": stage_evaluate, "compare": stage_compare}


def run_stages(cfg: PipelineConfig, stages=STAGES) -> RunManifest:
    """Run ``stages`` in order and write ``manifest.json``.

    A fatal error stops the run with exit code 2 and leaves earlier outputs
    in place; threshold violations found by ``evaluate`` give exit code 1.
    """
    manifest = RunManifest(cfg.hash())
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        manifest.failed_stage, manifest.reason, manifest.exit_code = "setup", str(exc), EXIT_FATAL
        return manifest
    for name in stages:
        t0 = time.perf_counter()
        manifest.stages.append(name)
        try:
            result = STAGE_FUNCS[name](cfg, manifest)
        except (PipelineError, FileNotFoundError, MiningError, SeriesError, OSError) as exc:
            manifest.failed_stage, manifest.reason, manifest.exit_code = name, str(exc), EXIT_FATAL
            log.error("stage %s failed: %s", name, exc)
            break
        finally:
            manifest.timings[name] = round(time.perf_counter() - t0, 6)
        if name == "evaluate" and result:
            manifest.exit_code = EXIT_THRESHOLD
    (cfg.out / MANIFEST).write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def run_pipeline(cfg: PipelineConfig) -> RunManifest:
    return run_stages(cfg, STAGES)
