"""Antialiased rasterizer for the workcell.

Shapes are painted by signed distance: coverage alpha falls off linearly over
one pixel around each boundary, so object positions remain observable at
sub-pixel precision even at small image sizes. Rendering is a pure function
of (state, view, size) and therefore deterministic.
"""

from __future__ import annotations

import math

import numpy as np

from armlab.errors import UsageError
from armlab.policy.types import Observation
from armlab.sim.tasks import TaskSpec
from armlab.sim.world import LEFT, RIGHT, WorldConfig, WorldState, ee_pose, fk_points, proprio_vector

BACKGROUND = (0.92, 0.92, 0.88)
ARM_COLORS = ((0.45, 0.50, 0.58), (0.58, 0.52, 0.42))
JAW_COLOR = (0.20, 0.20, 0.25)
LINK_WIDTHS = (0.016, 0.013, 0.009)
VIEWS = ("overhead", "wrist_left", "wrist_right")


class _Canvas:
    def __init__(self, rect: tuple[float, float, float, float], h: int, w: int):
        x0, y0, x1, y1 = rect
        px = (x1 - x0) / w
        py = (y1 - y0) / h
        # row 0 is the top of the view (max y)
        self.xs = (x0 + (np.arange(w, dtype=np.float32) + 0.5) * px)[None, :]
        self.ys = (y1 - (np.arange(h, dtype=np.float32) + 0.5) * py)[:, None]
        self.feather = np.float32(max(px, py))
        self.img = np.empty((h, w, 3), dtype=np.float32)
        self.img[:] = BACKGROUND

    def _paint(self, dist: np.ndarray, color) -> None:
        alpha = np.clip(0.5 - dist / self.feather, 0.0, 1.0)[..., None]
        self.img += alpha * (np.asarray(color, dtype=np.float32) - self.img)

    def circle(self, c, r: float, color) -> None:
        d = np.hypot(self.xs - np.float32(c[0]), self.ys - np.float32(c[1])) - np.float32(r)
        self._paint(d, color)

    def box(self, c, half_w: float, half_h: float, angle: float, color) -> None:
        ca, sa = math.cos(angle), math.sin(angle)
        dx = self.xs - np.float32(c[0])
        dy = self.ys - np.float32(c[1])
        u = np.abs(ca * dx + sa * dy) - np.float32(half_w)
        v = np.abs(-sa * dx + ca * dy) - np.float32(half_h)
        outside = np.hypot(np.maximum(u, 0.0), np.maximum(v, 0.0))
        inside = np.minimum(np.maximum(u, v), 0.0)
        self._paint(outside + inside, color)

    def capsule(self, a, b, r: float, color) -> None:
        ax, ay = np.float32(a[0]), np.float32(a[1])
        bx, by = np.float32(b[0]), np.float32(b[1])
        abx, aby = bx - ax, by - ay
        denom = max(float(abx * abx + aby * aby), 1e-12)
        px = self.xs - ax
        py = self.ys - ay
        t = np.clip((px * abx + py * aby) / denom, 0.0, 1.0)
        d = np.hypot(px - t * abx, py - t * aby) - np.float32(r)
        self._paint(d, color)

    def to_uint8(self) -> np.ndarray:
        return (np.clip(self.img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def _view_rect(view: str, state: WorldState, cfg: WorldConfig) -> tuple[float, float, float, float]:
    if view == "overhead":
        return cfg.view_rect
    if view in ("wrist_left", "wrist_right"):
        arm = LEFT if view == "wrist_left" else RIGHT
        pos, _ = ee_pose(arm, state, cfg)
        half = cfg.wrist_window / 2
        return (pos[0] - half, pos[1] - half, pos[0] + half, pos[1] + half)
    raise UsageError(f"unknown view '{view}' (have {VIEWS})")


def _draw_object(cv: _Canvas, kind: str, pose: np.ndarray, size: float, color) -> None:
    x, y, a = float(pose[0]), float(pose[1]), float(pose[2])
    if kind == "peg":
        cv.box((x, y), size, size, a, color)
    elif kind == "socket":
        cv.box((x, y), size * 1.5, size * 1.5, a, color)
        lighter = tuple(min(1.0, c + 0.55) for c in color)
        cv.box((x, y), size * 0.75, size * 0.75, a, lighter)
    elif kind == "plate":
        cv.circle((x, y), size, color)
        darker = tuple(c * 0.75 for c in color)
        cv.circle((x, y), size * 0.55, darker)
    elif kind == "mug":
        cv.circle((x, y), size, color)
        cv.box((x + math.cos(a) * size * 1.3, y + math.sin(a) * size * 1.3),
               size * 0.45, size * 0.3, a, color)
    else:
        cv.circle((x, y), size, color)


def render(state: WorldState, view: str, task: TaskSpec,
           cfg: WorldConfig | None = None, hw: tuple[int, int] = (64, 64)) -> np.ndarray:
    """Rasterize one camera view to [h, w, 3] uint8."""
    cfg = cfg or WorldConfig()
    h, w = hw
    cv = _Canvas(_view_rect(view, state, cfg), h, w)

    order = sorted(task.objects, key=lambda o: (o.graspable, o.name))
    for obj in order:  # statics first so movables paint over them
        _draw_object(cv, obj.kind, state.object_poses[obj.name], obj.size, obj.color)

    for arm in (LEFT, RIGHT):
        pts = fk_points(arm, state.joints[arm], cfg)
        for i in range(3):
            cv.capsule(pts[i], pts[i + 1], LINK_WIDTHS[i], ARM_COLORS[arm])
        pos, angle = ee_pose(arm, state, cfg)
        normal = np.array([-math.sin(angle), math.cos(angle)])
        ahead = np.array([math.cos(angle), math.sin(angle)])
        gap = 0.005 + 0.014 * float(state.grippers[arm])
        for side in (-1.0, 1.0):
            a = pos + side * gap * normal
            cv.capsule(a, a + 0.022 * ahead, 0.004, JAW_COLOR)
    return cv.to_uint8()


def observe(state: WorldState, task: TaskSpec, cfg: WorldConfig | None = None,
            views: tuple[str, ...] = VIEWS, hw: tuple[int, int] = (64, 64)) -> Observation:
    """Render the requested views and pack them with proprioception."""
    images = {v: render(state, v, task, cfg, hw) for v in views}
    return Observation(images=images, proprio=proprio_vector(state))
