"""Scripted demonstration experts.

Each expert is a stateless reactive controller: every call derives the phase
(approach, grasp, carry, release, retreat) from the current world state, so a
jitter-induced miss is followed by a natural re-approach in the same episode.
Strategy modes are deliberately distinct (which arm acts, or which socket is
served first) to give datasets real multimodality.
"""

from __future__ import annotations

import math

import numpy as np

from armlab.errors import ExpertFailure, UsageError
from armlab.seeding import rng_for
from armlab.sim.tasks import TaskSpec
from armlab.sim.world import (
    ACTION_DIM, GRIP_CLOSE, LEFT, RIGHT, WorldConfig, WorldState,
    ee_pose, hold_action, ik_solve,
)

CLOSE_RADIUS = 0.010   # command the gripper shut inside this EE-to-handle distance
HANDOVER_POINT = (0.0, 0.19)
CLEARANCE = 0.07       # other arm must retreat this far before a handover grasp


def expert_modes(task_id: str) -> tuple[str, ...]:
    if task_id == "double_insertion":
        return ("left_socket_first", "right_socket_first")
    return ("left_arm", "right_arm")


def _set_arm(action: np.ndarray, arm: int, target_xy, grip: float, cfg: WorldConfig) -> None:
    q = ik_solve(arm, tuple(target_xy), cfg)
    if q is None:
        raise ExpertFailure(f"arm {arm} cannot reach waypoint {tuple(np.round(target_xy, 3))}")
    action[arm * 3:arm * 3 + 3] = q
    action[6 + arm] = grip


def _home_arm(action: np.ndarray, arm: int, cfg: WorldConfig) -> None:
    _set_arm(action, arm, cfg.home_targets[arm], 1.0, cfg)


def _fetch_and_place(action: np.ndarray, state: WorldState, arm: int, obj_name: str,
                     dest_xy: np.ndarray, release_tol: float, cfg: WorldConfig) -> bool:
    """Drive `arm` to bring `obj_name` within release_tol of dest. True when done."""
    obj = state.object_poses[obj_name][:2]
    ee, _ = ee_pose(arm, state, cfg)
    grip = float(state.grippers[arm])
    placed = float(np.linalg.norm(obj - dest_xy)) <= release_tol

    if state.attached[arm] == obj_name:
        # hysteresis: once the jaws start opening, keep releasing unless the
        # object drifted well away, so jitter cannot flutter the command
        releasing = grip > GRIP_CLOSE + 0.05
        tol_now = max(release_tol, 2.5 * release_tol) if releasing else release_tol
        if float(np.linalg.norm(obj - dest_xy)) <= tol_now:
            _set_arm(action, arm, ee, 1.0, cfg)  # hold still, let go
        else:
            _set_arm(action, arm, dest_xy + (ee - obj), 0.0, cfg)
        return False
    if placed:
        _home_arm(action, arm, cfg)
        return True
    if grip < GRIP_CLOSE:
        _set_arm(action, arm, obj, 1.0, cfg)  # reopen after a missed grasp
    elif float(np.linalg.norm(ee - obj)) <= CLOSE_RADIUS:
        _set_arm(action, arm, obj, 0.0, cfg)
    else:
        _set_arm(action, arm, obj, 1.0, cfg)
    return False


def scripted_expert(state: WorldState, task: TaskSpec, mode: str,
                    noise_scale: float = 0.0, seed: int = 0,
                    cfg: WorldConfig | None = None) -> np.ndarray:
    """One action toward solving the task with the given strategy."""
    cfg = cfg or WorldConfig()
    if mode not in expert_modes(task.task_id):
        raise UsageError(f"mode '{mode}' invalid for {task.task_id}; "
                         f"have {expert_modes(task.task_id)}")
    action = hold_action(state)
    action[6:8] = 1.0

    if task.task_id == "double_insertion":
        _double_insertion(action, state, task, mode, cfg)
    else:
        arm = LEFT if mode == "left_arm" else RIGHT
        _home_arm(action, 1 - arm, cfg)
        mover, goal = task.goal_pair
        dest = state.object_poses[goal][:2]
        done = _fetch_and_place(action, state, arm, mover, dest,
                                task.success_tolerance * 0.5, cfg)
        if done:
            _home_arm(action, arm, cfg)

    if noise_scale > 0:
        rng = rng_for(seed, "expert-noise", state.tick)
        action = action + rng.normal(0.0, noise_scale, ACTION_DIM)
    action[:6] = np.clip(action[:6], -math.pi, math.pi)
    action[6:] = np.clip(action[6:], 0.0, 1.0)
    return action


def _double_insertion(action: np.ndarray, state: WorldState, task: TaskSpec,
                      mode: str, cfg: WorldConfig) -> None:
    order = ("socket_left", "socket_right") if mode == "left_socket_first" \
        else ("socket_right", "socket_left")
    arm_of = {"socket_left": LEFT, "socket_right": RIGHT}
    first, second = order
    peg = state.object_poses["peg"][:2]
    handover = np.array(HANDOVER_POINT)
    tol = task.success_tolerance * 0.5

    if first not in state.latched:
        arm = arm_of[first]
        _home_arm(action, 1 - arm, cfg)
        _fetch_and_place(action, state, arm, "peg",
                         state.object_poses[first][:2], tol, cfg)
        return
    if second not in state.latched:
        arm1, arm2 = arm_of[first], arm_of[second]
        at_handover = float(np.linalg.norm(peg - handover)) <= 0.03
        held_by_2 = state.attached[arm2] == "peg"
        if held_by_2 or (at_handover and "peg" not in state.attached):
            ee1, _ = ee_pose(arm1, state, cfg)
            _home_arm(action, arm1, cfg)
            if held_by_2 or float(np.linalg.norm(ee1 - peg)) > CLEARANCE:
                _fetch_and_place(action, state, arm2, "peg",
                                 state.object_poses[second][:2], tol, cfg)
            # else: wait for the first arm to clear the handover spot
        else:
            _home_arm(action, arm2, cfg)
            _fetch_and_place(action, state, arm1, "peg", handover, 0.012, cfg)
        return
    _home_arm(action, LEFT, cfg)
    _home_arm(action, RIGHT, cfg)
