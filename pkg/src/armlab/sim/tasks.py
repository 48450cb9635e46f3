"""Task specifications for the three tabletop tasks.

Placement zones are disjoint and sized so that every handle point, goal point
and the handover point stay inside the reach annulus of the arm assigned to
it (checked by tests against the arm geometry).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from armlab.errors import ConfigError

Range = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    kind: str                  # peg | socket | mug | plate
    color: tuple[float, float, float]
    size: float                # characteristic half-extent / radius in meters
    graspable: bool
    init_range: Range


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    objects: tuple[ObjectSpec, ...]
    success_tolerance: float = 0.01
    grasp_threshold: float = 0.02
    timeout_s: float = 40.0
    goal_pair: tuple[str, str] = ("", "")     # (moved object, goal object)
    latch_object: str = ""                    # object whose insertions latch
    latch_targets: tuple[str, ...] = ()       # sockets recorded in the latch

    def object(self, name: str) -> ObjectSpec:
        for o in self.objects:
            if o.name == name:
                return o
        raise ConfigError(f"task '{self.task_id}' has no object '{name}'")

    def to_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "objects": [{
                "name": o.name, "kind": o.kind, "color": list(o.color),
                "size": o.size, "graspable": o.graspable,
                "init_range": [list(r) for r in o.init_range],
            } for o in self.objects],
            "success_tolerance": self.success_tolerance,
            "grasp_threshold": self.grasp_threshold,
            "timeout_s": self.timeout_s,
            "goal_pair": list(self.goal_pair),
            "latch_object": self.latch_object,
            "latch_targets": list(self.latch_targets),
        }

    @staticmethod
    def from_dict(d: dict) -> "TaskSpec":
        objects = tuple(ObjectSpec(
            name=o["name"], kind=o["kind"], color=tuple(o["color"]), size=o["size"],
            graspable=o["graspable"],
            init_range=tuple(tuple(r) for r in o["init_range"]),
        ) for o in d["objects"])
        return TaskSpec(
            task_id=d["task_id"], objects=objects,
            success_tolerance=d["success_tolerance"], grasp_threshold=d["grasp_threshold"],
            timeout_s=d["timeout_s"], goal_pair=tuple(d["goal_pair"]),
            latch_object=d["latch_object"], latch_targets=tuple(d["latch_targets"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @staticmethod
    def load(path: str | Path) -> "TaskSpec":
        return TaskSpec.from_dict(json.loads(Path(path).read_text()))


_NO_SPIN = (-math.pi / 6, math.pi / 6)


def single_insertion() -> TaskSpec:
    return TaskSpec(
        task_id="single_insertion",
        objects=(
            ObjectSpec("peg", "peg", (0.85, 0.15, 0.10), 0.016, True,
                       ((-0.16, -0.04), (0.12, 0.26), _NO_SPIN)),
            ObjectSpec("socket", "socket", (0.15, 0.30, 0.80), 0.024, False,
                       ((0.04, 0.16), (0.12, 0.26), _NO_SPIN)),
        ),
        goal_pair=("peg", "socket"),
        latch_object="peg",
        latch_targets=("socket",),
    )


def double_insertion() -> TaskSpec:
    return TaskSpec(
        task_id="double_insertion",
        objects=(
            ObjectSpec("peg", "peg", (0.85, 0.15, 0.10), 0.016, True,
                       ((-0.05, 0.05), (0.14, 0.24), _NO_SPIN)),
            ObjectSpec("socket_left", "socket", (0.15, 0.30, 0.80), 0.024, False,
                       ((-0.17, -0.11), (0.13, 0.23), _NO_SPIN)),
            ObjectSpec("socket_right", "socket", (0.10, 0.55, 0.45), 0.024, False,
                       ((0.11, 0.17), (0.13, 0.23), _NO_SPIN)),
        ),
        goal_pair=("peg", "socket_right"),
        latch_object="peg",
        latch_targets=("socket_left", "socket_right"),
        timeout_s=60.0,
    )


def mug_on_plate() -> TaskSpec:
    return TaskSpec(
        task_id="mug_on_plate",
        objects=(
            ObjectSpec("mug", "mug", (0.80, 0.50, 0.15), 0.020, True,
                       ((-0.16, -0.04), (0.12, 0.26), _NO_SPIN)),
            ObjectSpec("plate", "plate", (0.55, 0.62, 0.70), 0.050, False,
                       ((0.04, 0.16), (0.12, 0.26), _NO_SPIN)),
        ),
        success_tolerance=0.035,
        goal_pair=("mug", "plate"),
        latch_object="mug",
        latch_targets=("plate",),
    )


TASKS = {
    "single_insertion": single_insertion,
    "double_insertion": double_insertion,
    "mug_on_plate": mug_on_plate,
}


def make_task(task_id: str) -> TaskSpec:
    if task_id not in TASKS:
        raise ConfigError(f"unknown task '{task_id}' (have {sorted(TASKS)})")
    return TASKS[task_id]()
