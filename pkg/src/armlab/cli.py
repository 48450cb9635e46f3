"""Command-line entry point.

Verbs: collect, teleop-serve, train, eval, ablate, plot, inspect. Every verb
resolves its configuration, hashes its inputs and writes a manifest.json into
the output directory before doing any work, so a run is reproducible from the
manifest alone.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

import armlab
from armlab.data import DatasetIndex, FilterSpec, collect_episodes, read_episode
from armlab.diffusion import make_schedule, schedule_csv
from armlab.errors import CorruptFileError, SchemaError, UsageError
from armlab.nn import OptimizerConfig
from armlab.policy import load_policy
from armlab.sim import VIEWS, WorldConfig, make_task
from armlab.train import (
    EvalReport, TrainConfig, ablate, emit_curves, eval_protocol, train,
)

log = logging.getLogger("armlab")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, verb: str, config: dict,
                    inputs: dict[str, Path] | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "verb": verb,
        "version": armlab.__version__,
        "config": config,
        "inputs": {name: _sha256(p) for name, p in (inputs or {}).items() if p.exists()},
    }
    (out_dir / "manifest.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _load_index(path: str) -> DatasetIndex:
    p = Path(path)
    if p.is_dir():
        return DatasetIndex.from_dir(p)
    return DatasetIndex.load_manifest(p)


def _hw(text: str) -> tuple[int, int]:
    h, w = (int(v) for v in text.split("x"))
    return h, w


# -- verbs ---------------------------------------------------------------


def cmd_collect(args) -> int:
    task = make_task(args.task)
    wcfg = WorldConfig(control_hz=args.hz)
    views = tuple(args.views.split(","))
    modes = tuple(args.modes.split(",")) if args.modes else None
    from armlab.sim import expert_modes
    modes = modes or expert_modes(args.task)
    out = Path(args.out)
    _write_manifest(out, "collect", {
        "task": args.task, "episodes": args.episodes, "modes": list(modes),
        "noise_scale": args.noise_scale, "seed": args.seed, "views": list(views),
        "image_hw": list(_hw(args.image_size)), "control_hz": args.hz,
    })
    paths = collect_episodes(task, modes, args.episodes, args.noise_scale, args.seed,
                             out, cfg=wcfg, views=views, hw=_hw(args.image_size))
    index = DatasetIndex.from_dir(out)
    index.save_manifest(out / "dataset.json")
    if len(index):
        (out / "stats.csv").write_text(index.norm_stats().to_csv())
    print(f"collected {len(paths)} episodes -> {out}")
    return 0


def cmd_teleop_serve(args) -> int:
    from armlab.teleop import TeleopCore, TeleopServer
    out = Path(args.out)
    _write_manifest(out, "teleop-serve", {
        "task": args.task, "port": args.port, "seed": args.seed,
        "views": args.views.split(","), "image_hw": list(_hw(args.image_size)),
        "control_hz": args.hz,
    })
    core = TeleopCore(args.task, out, seed=args.seed,
                      cfg=WorldConfig(control_hz=args.hz),
                      views=tuple(args.views.split(",")), hw=_hw(args.image_size))
    server = TeleopServer(core, host=args.host, port=args.port)
    print(f"teleop/v1 on ws://{args.host}:{args.port} (task {args.task}); Ctrl-C stops")
    try:
        server.run()
    except KeyboardInterrupt:
        pass
    return 0


def _train_config(args) -> TrainConfig:
    if args.config:
        cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text()))
        return cfg
    overrides: dict = {}
    if args.head:
        overrides["head_kind"] = args.head
    if args.chunk_len:
        overrides["chunk_len"] = args.chunk_len
    if args.cameras:
        overrides["cameras"] = tuple(args.cameras.split(","))
    if args.image_size:
        overrides["image_hw"] = _hw(args.image_size)
    return TrainConfig(
        task_id=args.task,
        policy_preset=args.preset,
        policy_overrides=overrides,
        optimizer=OptimizerConfig(base_rate=args.lr, warmup_steps=args.warmup),
        batch_size=args.batch_size,
        total_steps=args.steps,
        eval_every=args.eval_every,
        rollouts_per_eval=args.rollouts,
        eval_seeds=args.eval_seeds,
        inference_steps=args.inference_steps,
        data_filter=FilterSpec(fraction=args.fraction, fraction_seed=args.fraction_seed,
                               duration_percentile=args.duration_percentile),
        seed=args.seed,
    )


def cmd_train(args) -> int:
    cfg = _train_config(args)
    data = _load_index(args.data)
    out = Path(args.out)
    data_manifest = out / "dataset.json"
    out.mkdir(parents=True, exist_ok=True)
    data.save_manifest(data_manifest)
    _write_manifest(out, "train", cfg.to_dict(), {"dataset": data_manifest})
    ckpts = train(cfg, data, out)
    print(f"trained {cfg.total_steps} steps -> {len(ckpts)} checkpoints in {out}")
    if args.eval_after:
        task = make_task(cfg.task_id)
        report = eval_protocol(ckpts, cfg.rollouts_per_eval, cfg.eval_seeds,
                               cfg.inference_steps, task=task)
        (out / "eval_report.json").write_text(report.to_json() + "\n")
        emit_curves(report, out / "eval")
        print(f"best score {report.best_score():.3f} +/- {report.best_std():.3f}")
    return 0


def cmd_eval(args) -> int:
    paths: list[Path] = []
    for spec in args.ckpt:
        p = Path(spec)
        paths.extend(sorted(p.glob("ckpt_*.ckpt")) if p.is_dir() else [p])
    if not paths:
        raise UsageError("no checkpoints found")
    out = Path(args.out)
    _write_manifest(out, "eval", {
        "ckpts": [str(p) for p in paths], "task": args.task,
        "rollouts": args.rollouts, "eval_seeds": args.eval_seeds,
        "inference_steps": args.inference_steps,
    }, {f"ckpt{i}": p for i, p in enumerate(paths)})
    task = make_task(args.task) if args.task else None
    report = eval_protocol(paths, args.rollouts, args.eval_seeds,
                           args.inference_steps, task=task)
    (out / "eval_report.json").write_text(report.to_json() + "\n")
    emit_curves(report, out / "eval")
    print(report.to_csv(), end="")
    print(f"best score {report.best_score():.3f} +/- {report.best_std():.3f}")
    return 0


def cmd_ablate(args) -> int:
    cfg = _train_config(args)
    data = _load_index(args.data)
    grid = [json.loads(v) if v[0] in "0123456789.-[" else v
            for v in args.grid.split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_manifest = out / "dataset.json"
    data.save_manifest(data_manifest)
    _write_manifest(out, "ablate", {"kind": args.kind, "grid": grid,
                                    "base": cfg.to_dict()}, {"dataset": data_manifest})
    csv_path = ablate(args.kind, grid, cfg, data, out)
    print(csv_path.read_text(), end="")
    return 0


def cmd_plot(args) -> int:
    if args.schedule_T:
        text = schedule_csv(make_schedule(args.schedule_T, args.schedule_s))
        Path(args.out).write_text(text)
        print(f"schedule csv -> {args.out}")
        return 0
    report = EvalReport.from_json(Path(args.report).read_text())
    csv_path, svg_path = emit_curves(report, args.out)
    print(f"wrote {csv_path} and {svg_path}")
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.path)
    try:
        if path.suffix == ".adep":
            ep = read_episode(path)
            acts = ep.actions()
            print(f"episode {path.name}")
            print(f"  task={ep.meta.task_id} collector={ep.meta.collector} "
                  f"seed={ep.meta.seed}")
            print(f"  steps={ep.num_steps} control_hz={ep.meta.control_hz} "
                  f"duration={ep.meta.duration:.2f}s")
            if acts.size:
                for d in range(acts.shape[1]):
                    print(f"  action[{d}]: min={acts[:, d].min():+.4f} "
                          f"max={acts[:, d].max():+.4f}")
        elif path.suffix == ".ckpt":
            net, manifest = load_policy(path)
            print(f"checkpoint {path.name}: step={manifest['step']} "
                  f"params={net.param_count()}")
            print(json.dumps(manifest["config"].get("policy", {}), indent=1, sort_keys=True))
        else:
            index = DatasetIndex.load_manifest(path)
            total = sum(e.num_steps for e in index.entries)
            print(f"dataset {path.name}: episodes={len(index)} steps={total}")
            if len(index):
                durs = index.durations()
                print(f"  duration: min={durs.min():.2f}s median={np.median(durs):.2f}s "
                      f"max={durs.max():.2f}s")
    except (CorruptFileError, SchemaError) as e:
        print(f"CORRUPT: {e}", file=sys.stderr)
        return 1
    return 0


# -- parser ----------------------------------------------------------------


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="full TrainConfig as JSON (overrides the flags)")
    p.add_argument("--task", default="single_insertion")
    p.add_argument("--preset", default="desk-xs-lowres")
    p.add_argument("--head", choices=("diffusion", "l1"), default=None)
    p.add_argument("--chunk-len", type=int, default=None)
    p.add_argument("--steps", type=int, default=50_000)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--eval-every", type=int, default=5_000)
    p.add_argument("--rollouts", type=int, default=50)
    p.add_argument("--eval-seeds", type=int, default=3)
    p.add_argument("--inference-steps", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--warmup", type=int, default=5000)
    p.add_argument("--cameras", default=None, help="comma list of policy views")
    p.add_argument("--image-size", default=None, help="policy image size, e.g. 48x48")
    p.add_argument("--fraction", type=float, default=1.0)
    p.add_argument("--fraction-seed", type=int, default=0)
    p.add_argument("--duration-percentile", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="armlab", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("collect", help="record scripted expert demonstrations")
    p.add_argument("--task", default="single_insertion")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--modes", default=None, help="comma list; default: all task modes")
    p.add_argument("--noise-scale", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--views", default="overhead")
    p.add_argument("--image-size", default="48x48")
    p.add_argument("--hz", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_collect)

    p = sub.add_parser("teleop-serve", help="serve the teleop/v1 websocket endpoint")
    p.add_argument("--task", default="single_insertion")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--views", default=",".join(VIEWS))
    p.add_argument("--image-size", default="48x48")
    p.add_argument("--hz", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_teleop_serve)

    p = sub.add_parser("train", help="train a policy on a dataset")
    _add_train_flags(p)
    p.add_argument("--data", required=True, help="episode dir or dataset manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--eval-after", action="store_true",
                   help="run the evaluation protocol after training")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoints under the rollout protocol")
    p.add_argument("--ckpt", nargs="+", required=True, help="checkpoint files or run dirs")
    p.add_argument("--task", default=None)
    p.add_argument("--rollouts", type=int, default=50)
    p.add_argument("--eval-seeds", type=int, default=3)
    p.add_argument("--inference-steps", type=int, default=50)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("ablate", help="sweep one knob with the ablation runner")
    _add_train_flags(p)
    p.add_argument("--kind", required=True,
                   choices=("data_fraction", "duration_filter", "chunk_size",
                            "inference_steps", "head_kind"))
    p.add_argument("--grid", required=True, help="comma-separated values")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("plot", help="emit CSV+SVG curves from an eval report")
    p.add_argument("--report", help="eval_report.json")
    p.add_argument("--schedule-T", type=int, default=None,
                   help="dump a noise schedule CSV instead")
    p.add_argument("--schedule-s", type=float, default=0.008)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plot)

    p = sub.add_parser("inspect", help="summarize an episode, checkpoint or manifest")
    p.add_argument("path")
    p.set_defaults(fn=cmd_inspect)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, SchemaError, CorruptFileError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
