"""Rollout evaluation and the periodic-checkpoint protocol.

Rollouts within one (checkpoint, eval seed) cell run in lockstep batches:
every live episode replans at the same tick, so one batched denoiser call
serves the whole cell. Episodes drop out of the batch on success or timeout.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from armlab.diffusion.sampler import DiffusionConfig, ddim_sample_batch
from armlab.errors import SchemaError
from armlab.policy.network import PolicyNet, load_policy
from armlab.seeding import derive_seed
from armlab.sim import WorldConfig, make_task, observe, reset, step, success, timeout_ticks
from armlab.sim.tasks import TaskSpec

log = logging.getLogger(__name__)


def run_rollouts(net: PolicyNet, task: TaskSpec, env_seeds: list[int],
                 inference_steps: int, wcfg: WorldConfig | None = None) -> list[bool]:
    """Open-loop chunked control until success or timeout, one flag per seed."""
    wcfg = wcfg or WorldConfig()
    n = len(env_seeds)
    states = [reset(task, s, wcfg) for s in env_seeds]
    done = [False] * n
    solved = [False] * n
    max_ticks = timeout_ticks(task, wcfg)
    horizon = net.cfg.chunk_len
    dcfg = DiffusionConfig(T_train=net.cfg.T_train, inference_steps=inference_steps)
    tick = 0
    replan = 0
    while tick < max_ticks and not all(done):
        active = [i for i in range(n) if not done[i]]
        obs = [observe(states[i], task, wcfg, views=net.cfg.cameras, hw=net.cfg.image_hw)
               for i in active]
        if net.cfg.head_kind == "diffusion":
            seeds = [derive_seed(env_seeds[i], "chunk-noise", replan) for i in active]
            chunks = ddim_sample_batch(net, obs, dcfg, seeds)
        else:
            chunks = net.predict_chunk_batch(net.encode_observations(obs))
        chunks = net.denormalize_actions(chunks)
        for h in range(horizon):
            if tick >= max_ticks:
                break
            for bi, i in enumerate(active):
                if done[i]:
                    continue
                states[i] = step(states[i], chunks[bi, h].astype(np.float64), task, wcfg)
                if success(states[i], task):
                    done[i] = solved[i] = True
            tick += 1
            if all(done):
                break
        replan += 1
    return solved


@dataclass
class EvalReport:
    """Success-rate grid: rows are checkpoint steps, columns are eval seeds."""
    task_id: str
    rollouts: int
    inference_steps: int
    seeds: list[int]
    steps: list[int] = field(default_factory=list)
    rates: list[list[float]] = field(default_factory=list)  # [len(steps)][len(seeds)]

    def add_row(self, step: int, row: list[float]) -> None:
        if len(row) != len(self.seeds):
            raise SchemaError("row width must equal the number of eval seeds")
        if any(not (0.0 <= r <= 1.0) for r in row):
            raise SchemaError("success rates must lie in [0, 1]")
        self.steps.append(step)
        self.rates.append(list(row))

    def per_seed_best(self) -> list[float]:
        grid = np.asarray(self.rates)
        return [float(v) for v in grid.max(axis=0)]

    def best_score(self) -> float:
        """Mean over seeds of the per-seed max over checkpoints."""
        return float(np.mean(self.per_seed_best()))

    def best_std(self) -> float:
        return float(np.std(self.per_seed_best()))

    def mean_by_step(self) -> list[tuple[int, float]]:
        return [(s, float(np.mean(r))) for s, r in zip(self.steps, self.rates)]

    def to_json(self) -> str:
        return json.dumps({
            "task_id": self.task_id, "rollouts": self.rollouts,
            "inference_steps": self.inference_steps, "seeds": self.seeds,
            "steps": self.steps, "rates": self.rates,
            "per_seed_best": self.per_seed_best(),
            "best_score": self.best_score(), "best_std": self.best_std(),
        }, sort_keys=True, indent=1)

    @staticmethod
    def from_json(text: str) -> "EvalReport":
        d = json.loads(text)
        rep = EvalReport(task_id=d["task_id"], rollouts=d["rollouts"],
                         inference_steps=d["inference_steps"], seeds=d["seeds"])
        for s, row in zip(d["steps"], d["rates"]):
            rep.add_row(s, row)
        return rep

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("step,seed,success_rate\n")
        for s, row in zip(self.steps, self.rates):
            for seed, rate in zip(self.seeds, row):
                buf.write(f"{s},{seed},{rate:.6g}\n")
        return buf.getvalue()


def evaluate_checkpoint(ckpt_path: str | Path, task: TaskSpec, rollouts: int,
                        seeds: list[int], inference_steps: int,
                        wcfg: WorldConfig | None = None,
                        net: PolicyNet | None = None) -> list[float]:
    """Success rate per eval seed for one checkpoint."""
    if net is None:
        net, _ = load_policy(ckpt_path)
    rates = []
    for seed in seeds:
        env_seeds = [derive_seed(seed, "rollout", r) for r in range(rollouts)]
        flags = run_rollouts(net, task, env_seeds, inference_steps, wcfg)
        rates.append(sum(flags) / rollouts)
    return rates


def eval_protocol(ckpt_paths: list[str | Path], rollouts: int, eval_seeds: int,
                  inference_steps: int, task: TaskSpec | None = None,
                  wcfg: WorldConfig | None = None) -> EvalReport:
    """Evaluate a checkpoint series; report the grid plus max-over-checkpoints."""
    if not ckpt_paths:
        raise SchemaError("no checkpoints to evaluate")
    first_net, manifest = load_policy(ckpt_paths[0])
    if task is None:
        task_id = manifest["config"].get("task_id")
        if task_id is None:
            raise SchemaError("checkpoint does not record a task; pass one explicitly")
        task = make_task(task_id)
    seeds = list(range(1, eval_seeds + 1))
    report = EvalReport(task_id=task.task_id, rollouts=rollouts,
                        inference_steps=inference_steps, seeds=seeds)
    for i, path in enumerate(ckpt_paths):
        net, man = (first_net, manifest) if i == 0 else load_policy(path)
        rates = evaluate_checkpoint(path, task, rollouts, seeds, inference_steps,
                                    wcfg, net=net)
        report.add_row(man["step"], rates)
        log.info("eval %s: %s", Path(path).name, rates)
    return report
