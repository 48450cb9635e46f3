"""Planar bimanual workcell: two 3-link arms with parallel grippers over a
tabletop, kinematic grasping, and per-task success predicates.

All motion is kinematic: joints track absolute targets under a per-tick rate
limit, a closing gripper within grasp range attaches the nearest graspable
object, and attached objects ride the gripper frame. WorldState is treated as
an immutable value; step() returns a new state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from armlab.errors import UsageError
from armlab.seeding import rng_for
from armlab.sim.tasks import TaskSpec

LEFT, RIGHT = 0, 1
ACTION_DIM = 8  # [left q1 q2 q3, right q1 q2 q3, left grip, right grip]

GRIP_CLOSE = 0.45   # attach when openness crosses below this while in range
GRIP_OPEN = 0.55    # detach when openness rises above this


@dataclass(frozen=True)
class ArmGeometry:
    base: tuple[float, float]
    base_angle: float
    links: tuple[float, float, float]
    elbow_sign: float  # +1 bends the elbow counter-clockwise


@dataclass(frozen=True)
class WorldConfig:
    control_hz: int = 10
    joint_rate: float = 2.0    # rad/s
    grip_rate: float = 4.0     # openness units/s
    arms: tuple[ArmGeometry, ArmGeometry] = (
        ArmGeometry(base=(-0.28, 0.0), base_angle=math.pi / 2,
                    links=(0.26, 0.20, 0.07), elbow_sign=-1.0),
        ArmGeometry(base=(0.28, 0.0), base_angle=math.pi / 2,
                    links=(0.26, 0.20, 0.07), elbow_sign=1.0),
    )
    home_targets: tuple[tuple[float, float], ...] = ((-0.17, 0.14), (0.17, 0.14))
    view_rect: tuple[float, float, float, float] = (-0.36, -0.06, 0.36, 0.42)
    wrist_window: float = 0.12

    def home_joints(self) -> np.ndarray:
        joints = np.zeros((2, 3), dtype=np.float64)
        for arm in (LEFT, RIGHT):
            q = ik_solve(arm, self.home_targets[arm], self)
            if q is None:
                raise UsageError("home target unreachable; fix WorldConfig")
            joints[arm] = q
        return joints


@dataclass(frozen=True)
class WorldState:
    joints: np.ndarray                 # [2, 3] radians
    grippers: np.ndarray               # [2] openness in [0, 1]
    object_poses: dict[str, np.ndarray]  # name -> (x, y, angle)
    attached: tuple[str | None, str | None]
    grasp_offsets: tuple[np.ndarray | None, np.ndarray | None]  # pose in gripper frame
    latched: frozenset[str]
    tick: int
    control_hz: int
    fault: bool = False


def _unit(theta: float) -> np.ndarray:
    return np.array([math.cos(theta), math.sin(theta)])


def fk_points(arm: int, joints: np.ndarray, cfg: WorldConfig) -> list[np.ndarray]:
    """Base, elbow, wrist and end-effector positions for one arm."""
    geo = cfg.arms[arm]
    th1 = geo.base_angle + joints[0]
    th2 = th1 + joints[1]
    th3 = th2 + joints[2]
    p0 = np.array(geo.base, dtype=np.float64)
    p1 = p0 + geo.links[0] * _unit(th1)
    p2 = p1 + geo.links[1] * _unit(th2)
    p3 = p2 + geo.links[2] * _unit(th3)
    return [p0, p1, p2, p3]


def ee_pose(arm: int, state: WorldState, cfg: WorldConfig) -> tuple[np.ndarray, float]:
    """(position, absolute wrist angle) of one gripper."""
    geo = cfg.arms[arm]
    pts = fk_points(arm, state.joints[arm], cfg)
    angle = geo.base_angle + float(state.joints[arm].sum())
    return pts[3], angle


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def ik_solve(arm: int, target: tuple[float, float], cfg: WorldConfig) -> np.ndarray | None:
    """Joint triple reaching `target`, or None when out of the reach annulus.

    The redundant third joint is resolved by a fixed convention: the wrist
    link points radially outward from the arm base toward the target.
    """
    geo = cfg.arms[arm]
    l1, l2, l3 = geo.links
    base = np.array(geo.base)
    to_target = np.array(target, dtype=np.float64) - base
    dist = float(np.hypot(*to_target))
    if dist < 1e-9:
        return None
    phi = math.atan2(to_target[1], to_target[0])
    wrist = np.array(target) - l3 * _unit(phi)
    d = float(np.linalg.norm(wrist - base))
    if d > l1 + l2 or d < abs(l1 - l2):
        return None
    c2 = (d * d - l1 * l1 - l2 * l2) / (2 * l1 * l2)
    q2 = geo.elbow_sign * math.acos(min(1.0, max(-1.0, c2)))
    w = wrist - base
    q1 = math.atan2(w[1], w[0]) - math.atan2(l2 * math.sin(q2), l1 + l2 * math.cos(q2)) \
        - geo.base_angle
    q3 = phi - (geo.base_angle + q1 + q2)
    return np.array([_wrap(q1), _wrap(q2), _wrap(q3)])


def reset(task: TaskSpec, seed: int, cfg: WorldConfig | None = None) -> WorldState:
    """Home the arms and place objects uniformly within their ranges."""
    cfg = cfg or WorldConfig()
    rng = rng_for(seed, "reset", task.task_id)
    poses: dict[str, np.ndarray] = {}
    for obj in task.objects:
        (x0, x1), (y0, y1), (a0, a1) = obj.init_range
        poses[obj.name] = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1),
                                    rng.uniform(a0, a1)])
    return WorldState(
        joints=cfg.home_joints(),
        grippers=np.ones(2),
        object_poses=poses,
        attached=(None, None),
        grasp_offsets=(None, None),
        latched=frozenset(),
        tick=0,
        control_hz=cfg.control_hz,
    )


def _gripper_frame(pos: np.ndarray, angle: float, offset: np.ndarray) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    x = pos[0] + c * offset[0] - s * offset[1]
    y = pos[1] + s * offset[0] + c * offset[1]
    return np.array([x, y, _wrap(angle + offset[2])])


def _to_gripper_frame(pos: np.ndarray, angle: float, pose: np.ndarray) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    dx, dy = pose[0] - pos[0], pose[1] - pos[1]
    return np.array([c * dx + s * dy, -s * dx + c * dy, _wrap(pose[2] - angle)])


def step(state: WorldState, action: np.ndarray, task: TaskSpec,
         cfg: WorldConfig | None = None) -> WorldState:
    """Advance one control tick toward absolute joint/gripper targets."""
    cfg = cfg or WorldConfig()
    action = np.asarray(action, dtype=np.float64)
    if action.shape != (ACTION_DIM,):
        raise UsageError(f"action must have shape ({ACTION_DIM},), got {action.shape}")
    if not np.all(np.isfinite(action)):
        return replace(state, tick=state.tick + 1, fault=True)

    dt = 1.0 / cfg.control_hz
    joint_targets = np.clip(action[:6].reshape(2, 3), -math.pi, math.pi)
    grip_targets = np.clip(action[6:8], 0.0, 1.0)

    max_dq = cfg.joint_rate * dt
    joints = state.joints + np.clip(joint_targets - state.joints, -max_dq, max_dq)
    max_dg = cfg.grip_rate * dt
    grippers = state.grippers + np.clip(grip_targets - state.grippers, -max_dg, max_dg)

    poses = {k: v.copy() for k, v in state.object_poses.items()}
    attached = list(state.attached)
    offsets = list(state.grasp_offsets)
    graspable = {o.name for o in task.objects if o.graspable}

    moved = replace(state, joints=joints, grippers=grippers)
    for arm in (LEFT, RIGHT):
        pos, angle = ee_pose(arm, moved, cfg)
        # attached objects ride the gripper frame
        if attached[arm] is not None:
            poses[attached[arm]] = _gripper_frame(pos, angle, offsets[arm])
        was, now = state.grippers[arm], grippers[arm]
        if attached[arm] is not None and now > GRIP_OPEN >= was:
            attached[arm], offsets[arm] = None, None
        elif attached[arm] is None and was >= GRIP_CLOSE > now:
            best, best_d = None, task.grasp_threshold
            for name in sorted(graspable):
                if name in (attached[LEFT], attached[RIGHT]):
                    continue
                d = float(np.linalg.norm(poses[name][:2] - pos))
                if d <= best_d:
                    best, best_d = name, d
            if best is not None:
                attached[arm] = best
                offsets[arm] = _to_gripper_frame(pos, angle, poses[best])

    latched = set(state.latched)
    for socket in task.latch_targets:
        target = task.latch_object
        if target in (attached[LEFT], attached[RIGHT]):
            continue
        if np.linalg.norm(poses[target][:2] - poses[socket][:2]) <= task.success_tolerance:
            latched.add(socket)

    return WorldState(
        joints=joints, grippers=grippers, object_poses=poses,
        attached=(attached[LEFT], attached[RIGHT]),
        grasp_offsets=(offsets[LEFT], offsets[RIGHT]),
        latched=frozenset(latched), tick=state.tick + 1,
        control_hz=state.control_hz, fault=state.fault,
    )


def success(state: WorldState, task: TaskSpec) -> bool:
    """Geometric goal predicate; always False on a faulted episode."""
    if state.fault:
        return False
    if task.task_id == "double_insertion":
        return all(s in state.latched for s in task.latch_targets)
    mover, goal = task.goal_pair
    if mover in state.attached:
        return False
    d = float(np.linalg.norm(state.object_poses[mover][:2] - state.object_poses[goal][:2]))
    return d <= task.success_tolerance


def proprio_vector(state: WorldState) -> np.ndarray:
    """Joint positions and gripper values in action layout."""
    return np.concatenate([state.joints.reshape(-1), state.grippers]).astype(np.float32)


def hold_action(state: WorldState) -> np.ndarray:
    """The action that keeps the current pose."""
    return proprio_vector(state).astype(np.float64)


def timeout_ticks(task: TaskSpec, cfg: WorldConfig) -> int:
    return int(round(task.timeout_s * cfg.control_hz))
