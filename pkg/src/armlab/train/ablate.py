"""Ablation runner: sweep one knob, train/evaluate each leg, merge results.

The inference_steps sweep is special-cased: it trains once and re-evaluates
the same checkpoint series with different sampler step counts, since the
parameters are identical and only sampling changes.
"""

from __future__ import annotations

import dataclasses
import io
import logging
from pathlib import Path

from armlab.data.index import DatasetIndex, FilterSpec
from armlab.errors import UsageError
from armlab.sim import make_task
from armlab.train.config import TrainConfig
from armlab.train.evaluate import EvalReport, eval_protocol
from armlab.train.loop import train
from armlab.train.plots import emit_ablation_curves, emit_curves

log = logging.getLogger(__name__)

KINDS = ("data_fraction", "duration_filter", "chunk_size", "inference_steps", "head_kind")


def _leg_config(base: TrainConfig, kind: str, value) -> TrainConfig:
    if kind == "data_fraction":
        return dataclasses.replace(base, data_filter=dataclasses.replace(
            base.data_filter, fraction=float(value)))
    if kind == "duration_filter":
        return dataclasses.replace(base, data_filter=dataclasses.replace(
            base.data_filter, duration_percentile=float(value)))
    if kind == "chunk_size":
        overrides = dict(base.policy_overrides)
        overrides["chunk_len"] = int(value)
        return dataclasses.replace(base, policy_overrides=overrides)
    if kind == "head_kind":
        overrides = dict(base.policy_overrides)
        overrides["head_kind"] = str(value)
        return dataclasses.replace(base, policy_overrides=overrides)
    raise UsageError(f"unknown ablation kind '{kind}' (have {KINDS})")


def ablate(kind: str, grid: list, base: TrainConfig, data: DatasetIndex,
           out_dir: str | Path) -> Path:
    """Run the sweep; returns the merged CSV path. Failed legs are recorded
    and the remaining legs still run."""
    if kind not in KINDS:
        raise UsageError(f"unknown ablation kind '{kind}' (have {KINDS})")
    if not grid:
        raise UsageError("ablation grid must be non-empty")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    task = make_task(base.task_id)
    rows: list[dict] = []
    curves: dict[str, list[tuple[float, float]]] = {}

    def record(value, report: EvalReport | None, status: str):
        row = {"kind": kind, "value": value, "status": status}
        if report is not None:
            row["best_score"] = f"{report.best_score():.4f}"
            row["best_std"] = f"{report.best_std():.4f}"
            curves[f"{kind}={value}"] = report.mean_by_step()
        rows.append(row)

    if kind == "inference_steps":
        leg_dir = out / "shared_train"
        ckpts = train(base, data, leg_dir)
        for value in grid:
            try:
                report = eval_protocol(ckpts, base.rollouts_per_eval, base.eval_seeds,
                                       int(value), task=task)
                emit_curves(report, leg_dir / f"eval_steps{value}")
                record(value, report, "ok")
            except Exception as e:  # partial results survive a failed leg
                log.exception("inference_steps=%s failed", value)
                record(value, None, f"failed: {e}")
    else:
        for value in grid:
            leg_dir = out / f"{kind}_{value}"
            try:
                cfg = _leg_config(base, kind, value)
                ckpts = train(cfg, data, leg_dir)
                report = eval_protocol(ckpts, cfg.rollouts_per_eval, cfg.eval_seeds,
                                       cfg.inference_steps, task=task)
                emit_curves(report, leg_dir / "eval")
                record(value, report, "ok")
            except Exception as e:
                log.exception("%s=%s failed", kind, value)
                record(value, None, f"failed: {e}")

    buf = io.StringIO()
    buf.write("kind,value,status,best_score,best_std\n")
    for row in rows:
        buf.write(f"{row['kind']},{row['value']},{row['status']},"
                  f"{row.get('best_score', '')},{row.get('best_std', '')}\n")
    csv_path = out / "ablation.csv"
    csv_path.write_text(buf.getvalue())
    emit_ablation_curves(curves, f"{base.task_id}: {kind} sweep", out / "ablation.svg")
    return csv_path
