"""Scripted demonstration collection: expert rollouts recorded as episodes."""

from __future__ import annotations

import logging
from pathlib import Path

from armlab.data.episode import Episode, make_episode, write_episode
from armlab.errors import ExpertFailure, UsageError
from armlab.seeding import derive_seed
from armlab.sim import (
    WorldConfig, TaskSpec, expert_modes, observe, reset, scripted_expert,
    step, success, timeout_ticks,
)

log = logging.getLogger(__name__)


def record_expert_episode(task: TaskSpec, mode: str, noise_scale: float, seed: int,
                          cfg: WorldConfig, views: tuple[str, ...],
                          hw: tuple[int, int]) -> Episode | None:
    """One expert rollout as a recorded episode; None when it failed/timed out."""
    state = reset(task, seed, cfg)
    steps = []
    limit = timeout_ticks(task, cfg)
    solved = False
    for _ in range(limit):
        obs = observe(state, task, cfg, views=views, hw=hw)
        try:
            action = scripted_expert(state, task, mode, noise_scale, seed, cfg)
        except ExpertFailure as e:
            log.warning("expert failure on seed %d: %s", seed, e)
            return None
        steps.append((obs, action.astype("f4")))
        state = step(state, action, task, cfg)
        if success(state, task):
            solved = True
            break
    if not solved:
        return None
    return make_episode(task.task_id, cfg.control_hz, f"scripted:{mode}", seed, steps)


def collect_episodes(task: TaskSpec, modes: tuple[str, ...], episodes: int,
                     noise_scale: float, seed: int, out_dir: str | Path,
                     cfg: WorldConfig | None = None,
                     views: tuple[str, ...] = ("overhead",),
                     hw: tuple[int, int] = (48, 48),
                     max_failure_rate: float = 0.5) -> list[Path]:
    """Store exactly `episodes` successful demonstrations, alternating modes.

    Failed rollouts are discarded and logged; the run aborts if the failure
    rate exceeds `max_failure_rate` after a settling-in period.
    """
    cfg = cfg or WorldConfig()
    for m in modes:
        if m not in expert_modes(task.task_id):
            raise UsageError(f"mode '{m}' invalid for task {task.task_id}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []
    attempts = 0
    while len(paths) < episodes:
        ep_seed = derive_seed(seed, "collect", attempts)
        mode = modes[attempts % len(modes)]
        attempts += 1
        ep = record_expert_episode(task, mode, noise_scale, ep_seed, cfg, views, hw)
        if ep is None:
            failures = attempts - len(paths)
            if attempts >= 20 and failures / attempts > max_failure_rate:
                raise UsageError(
                    f"expert failure rate {failures}/{attempts} exceeds "
                    f"{max_failure_rate:.0%}; aborting collection")
            continue
        path = out / f"ep_{len(paths):06d}.adep"
        write_episode(ep, path)
        paths.append(path)
    return paths
