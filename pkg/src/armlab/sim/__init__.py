from armlab.sim.tasks import TaskSpec, ObjectSpec, TASKS, make_task
from armlab.sim.world import (
    ACTION_DIM, LEFT, RIGHT, WorldConfig, WorldState, ArmGeometry,
    fk_points, ee_pose, ik_solve, reset, step, success,
    proprio_vector, hold_action, timeout_ticks,
)
from armlab.sim.render import VIEWS, render, observe
from armlab.sim.expert import scripted_expert, expert_modes

__all__ = [
    "TaskSpec", "ObjectSpec", "TASKS", "make_task",
    "ACTION_DIM", "LEFT", "RIGHT", "WorldConfig", "WorldState", "ArmGeometry",
    "fk_points", "ee_pose", "ik_solve", "reset", "step", "success",
    "proprio_vector", "hold_action", "timeout_ticks",
    "VIEWS", "render", "observe",
    "scripted_expert", "expert_modes",
]
