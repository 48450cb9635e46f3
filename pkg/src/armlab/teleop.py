"""Websocket teleoperation server, protocol "teleop/v1".

Client -> server:
  {"type": "control", "arm": 0|1, "target_xy": [x, y], "gripper": 0..1}
  {"type": "record", "op": "start" | "stop" | "discard"}
  {"type": "playback", "path": "<episode file relative to the data dir>"}

Server -> client:
  {"type": "hello", "v": "teleop/v1", "task": ..., "control_hz": ...,
   "views": [{"id", "h", "w"}, ...]}
  {"type": "frame", "tick": int, "views": {id: base64 raw RGB}, "proprio": [...]}
  {"type": "status", "recording": bool, "episode_count": int}
  {"type": "error", "reason": str}
  {"type": "playback_meta" | "playback_frame" | "playback_done", ...}

One live session at a time; a second connection is refused with an error
frame. Control targets are converted to joint targets through the planar IK
(targets outside the reach annulus are radially clamped). Recording buffers
(observation, action) pairs per tick and writes the same episode container
scripted collection uses, so teleoperated demonstrations train identically.
"""

from __future__ import annotations

import asyncio
import base64
import json
import logging
import math
import threading
from pathlib import Path

import numpy as np

from armlab.data.episode import make_episode, read_episode, write_episode
from armlab.errors import SchemaError
from armlab.sim import (
    WorldConfig, hold_action, ik_solve, make_task, observe, reset, step,
)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = "teleop/v1"

_CLIENT_SCHEMAS = {
    "control": {"arm", "target_xy", "gripper"},
    "record": {"op"},
    "playback": {"path"},
}


def validate_client_message(msg: dict) -> None:
    """Raise SchemaError when a client message does not follow teleop/v1."""
    if not isinstance(msg, dict) or "type" not in msg:
        raise SchemaError("message must be an object with a 'type' field")
    mtype = msg["type"]
    if mtype not in _CLIENT_SCHEMAS:
        raise SchemaError(f"unknown client message type '{mtype}'")
    missing = _CLIENT_SCHEMAS[mtype] - set(msg)
    if missing:
        raise SchemaError(f"'{mtype}' message missing fields {sorted(missing)}")
    if mtype == "control":
        if msg["arm"] not in (0, 1):
            raise SchemaError("control.arm must be 0 or 1")
        xy = msg["target_xy"]
        if (not isinstance(xy, (list, tuple)) or len(xy) != 2
                or not all(isinstance(v, (int, float)) for v in xy)):
            raise SchemaError("control.target_xy must be [x, y]")
        g = msg["gripper"]
        if not isinstance(g, (int, float)) or not (0.0 <= g <= 1.0):
            raise SchemaError("control.gripper must lie in [0, 1]")
    elif mtype == "record" and msg["op"] not in ("start", "stop", "discard"):
        raise SchemaError("record.op must be start|stop|discard")


def clamp_to_reach(arm: int, target_xy, cfg: WorldConfig) -> tuple[float, float]:
    """Pull a target radially into the arm's reach annulus."""
    geo = cfg.arms[arm]
    base = np.array(geo.base)
    l1, l2, l3 = geo.links
    lo = abs(l1 - l2) + l3 + 1e-4
    hi = l1 + l2 + l3 - 1e-4
    v = np.asarray(target_xy, dtype=np.float64) - base
    r = float(np.hypot(*v))
    if r < 1e-9:
        return tuple(base + np.array([lo, 0.0]))
    r_clamped = min(max(r, lo), hi)
    return tuple(base + v * (r_clamped / r))


class TeleopCore:
    """Transport-independent session logic: controls in, frames out."""

    def __init__(self, task_id: str, out_dir: str | Path, seed: int = 0,
                 cfg: WorldConfig | None = None,
                 views: tuple[str, ...] = ("overhead", "wrist_left", "wrist_right"),
                 hw: tuple[int, int] = (48, 48)):
        self.task = make_task(task_id)
        self.cfg = cfg or WorldConfig()
        self.views = views
        self.hw = hw
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.seed = seed
        self.state = reset(self.task, seed, self.cfg)
        self.controls: dict[int, tuple[tuple[float, float], float]] = {}
        self.recording = False
        self.buffer: list = []
        self.episode_count = 0

    def hello(self) -> dict:
        return {"type": "hello", "v": PROTOCOL_VERSION, "task": self.task.task_id,
                "control_hz": self.cfg.control_hz,
                "views": [{"id": v, "h": self.hw[0], "w": self.hw[1]} for v in self.views],
                "workspace_rect": list(self.cfg.view_rect)}

    def status(self) -> dict:
        return {"type": "status", "recording": self.recording,
                "episode_count": self.episode_count}

    def handle(self, msg: dict) -> list[dict]:
        """Apply one client message; returns reply messages (excluding frames)."""
        try:
            validate_client_message(msg)
        except SchemaError as e:
            return [{"type": "error", "reason": str(e)}]
        if msg["type"] == "control":
            target = clamp_to_reach(int(msg["arm"]), msg["target_xy"], self.cfg)
            self.controls[int(msg["arm"])] = (target, float(msg["gripper"]))
            return []
        if msg["type"] == "record":
            return [self._record(msg["op"])]
        return self._playback(msg["path"])

    def _record(self, op: str) -> dict:
        if op == "start":
            self.recording = True
            self.buffer = []
        elif op == "stop":
            if self.recording and self.buffer:
                ep = make_episode(self.task.task_id, self.cfg.control_hz,
                                  "teleop:live", self.seed, self.buffer)
                path = self.out_dir / f"teleop_{self.episode_count:06d}.adep"
                write_episode(ep, path)
                self.episode_count += 1
                log.info("recorded %s (%d steps)", path.name, ep.num_steps)
            self.recording = False
            self.buffer = []
        else:  # discard
            self.recording = False
            self.buffer = []
        return self.status()

    def _playback(self, rel_path: str) -> list[dict]:
        path = (self.out_dir / rel_path).resolve()
        if not str(path).startswith(str(self.out_dir.resolve())):
            return [{"type": "error", "reason": "path escapes the data directory"}]
        try:
            ep = read_episode(path)
        except Exception as e:
            return [{"type": "error", "reason": f"cannot read episode: {e}"}]
        out: list[dict] = [{
            "type": "playback_meta", "num_steps": ep.num_steps,
            "views": [{"id": vid, "h": img.shape[0], "w": img.shape[1]}
                      for vid, img in sorted(ep.steps[0][0].images.items())] if ep.steps else [],
        }]
        for i, (obs, action) in enumerate(ep.steps):
            out.append({
                "type": "playback_frame", "tick": i,
                "views": {vid: base64.b64encode(img.tobytes()).decode("ascii")
                          for vid, img in sorted(obs.images.items())},
                "proprio": [float(v) for v in obs.proprio],
                "action": [float(v) for v in action],
            })
        out.append({"type": "playback_done"})
        return out

    def tick(self) -> dict:
        """Advance the sim one control period and return the frame message."""
        action = hold_action(self.state)
        for arm, (target, grip) in self.controls.items():
            q = ik_solve(arm, target, self.cfg)
            if q is not None:
                action[arm * 3:arm * 3 + 3] = q
            action[6 + arm] = min(max(grip, 0.0), 1.0)
        obs = observe(self.state, self.task, self.cfg, views=self.views, hw=self.hw)
        if self.recording:
            self.buffer.append((obs, np.asarray(action, dtype="f4")))
        self.state = step(self.state, action, self.task, self.cfg)
        return {
            "type": "frame", "tick": self.state.tick,
            "views": {vid: base64.b64encode(img.tobytes()).decode("ascii")
                      for vid, img in obs.images.items()},
            "proprio": [float(v) for v in obs.proprio],
        }

    def disconnect(self) -> None:
        if self.recording:
            log.info("client left mid-recording; episode discarded")
        self.recording = False
        self.buffer = []


class TeleopServer:
    """Runs TeleopCore behind a websocket endpoint at the sim tick rate."""

    def __init__(self, core: TeleopCore, host: str = "127.0.0.1", port: int = 8765,
                 tick_interval: float | None = None):
        self.core = core
        self.host = host
        self.port = port
        self.tick_interval = (1.0 / core.cfg.control_hz
                              if tick_interval is None else tick_interval)
        self._busy = False
        self._loop: asyncio.AbstractEventLoop | None = None
        self._stop: asyncio.Event | None = None
        self.started = threading.Event()

    async def _session(self, ws) -> None:
        if self._busy:
            await ws.send(json.dumps(
                {"type": "error", "reason": "session in use; one operator at a time"}))
            await ws.close()
            return
        self._busy = True
        core = self.core
        try:
            await ws.send(json.dumps(core.hello()))
            await ws.send(json.dumps(core.status()))

            async def pump_in():
                async for raw in ws:
                    try:
                        msg = json.loads(raw)
                    except json.JSONDecodeError:
                        await ws.send(json.dumps(
                            {"type": "error", "reason": "malformed JSON"}))
                        continue
                    for reply in core.handle(msg if isinstance(msg, dict) else {}):
                        await ws.send(json.dumps(reply))

            async def pump_out():
                while True:
                    frame = core.tick()
                    await ws.send(json.dumps(frame))
                    await asyncio.sleep(self.tick_interval)

            reader = asyncio.create_task(pump_in())
            writer = asyncio.create_task(pump_out())
            done, pending = await asyncio.wait(
                {reader, writer}, return_when=asyncio.FIRST_COMPLETED)
            for t in pending:
                t.cancel()
        finally:
            core.disconnect()
            self._busy = False

    async def _main(self) -> None:
        from websockets.asyncio.server import serve
        self._stop = asyncio.Event()
        self._loop = asyncio.get_running_loop()
        async with serve(self._session, self.host, self.port):
            log.info("teleop serving ws://%s:%d (%s)", self.host, self.port,
                     PROTOCOL_VERSION)
            self.started.set()
            await self._stop.wait()

    def run(self) -> None:
        asyncio.run(self._main())

    def stop(self) -> None:
        if self._loop and self._stop:
            self._loop.call_soon_threadsafe(self._stop.set)
