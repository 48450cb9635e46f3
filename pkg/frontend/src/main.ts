/**
 * Browser entry point: live teleoperation plus episode playback.
 *
 * Pointer position on the workspace canvas steers the selected arm; keys
 * switch arms (1/2), toggle the gripper (g) and drive recording (r/s/d).
 * Frames stream from the teleop/v1 websocket; one control message goes out
 * per acknowledged frame tick.
 */

import { ControlThrottle, WorkspaceMap, canvasToWorld, keyAction } from "./input.js";
import { PlaybackStore } from "./playback.js";
import {
  buildControlMessage, buildPlaybackRequest, buildRecordMessage,
  parseServerMessage,
} from "./protocol.js";
import {
  SessionView, applyServer, controlsEnabled, initialSession, markClosed,
  selectArm, toggleGripper,
} from "./session.js";
import { drawFrame, drawTargetMarker } from "./render.js";

const params = new URLSearchParams(location.search);
const wsUrl = params.get("ws") ?? "ws://127.0.0.1:8765";

let view: SessionView = initialSession();
const throttle = new ControlThrottle();
const playback = new PlaybackStore();
let pointerTarget: [number, number] | null = null;

const workspace = document.getElementById("workspace") as HTMLCanvasElement;
const wristLeft = document.getElementById("wrist-left") as HTMLCanvasElement;
const wristRight = document.getElementById("wrist-right") as HTMLCanvasElement;
const statusBar = document.getElementById("status") as HTMLDivElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const proprioBox = document.getElementById("proprio") as HTMLPreElement;
const scrubber = document.getElementById("scrubber") as HTMLInputElement;
const playbackPath = document.getElementById("playback-path") as HTMLInputElement;
const playbackCanvas = document.getElementById("playback-canvas") as HTMLCanvasElement;
const playbackInfo = document.getElementById("playback-info") as HTMLPreElement;

function mapFor(canvas: HTMLCanvasElement): WorkspaceMap {
  return { rect: view.workspaceRect, width: canvas.width, height: canvas.height };
}

function fmt(xs: number[]): string {
  return xs.map((v) => v.toFixed(3).padStart(7)).join(" ");
}

function redraw(): void {
  const byId: Record<string, HTMLCanvasElement> = {
    overhead: workspace, wrist_left: wristLeft, wrist_right: wristRight,
  };
  for (const info of view.views) {
    const canvas = byId[info.id];
    const b64 = view.frames[info.id];
    if (canvas && b64) drawFrame(canvas, b64, info);
  }
  if (pointerTarget) {
    drawTargetMarker(workspace, mapFor(workspace), pointerTarget[0], pointerTarget[1],
      view.selectedArm === 0 ? "#2060ff" : "#ff8020");
  }
  statusBar.textContent =
    `${view.connection} | task ${view.task} | tick ${view.tick}` +
    ` | arm ${view.selectedArm === 0 ? "left" : "right"}` +
    ` | grip L ${view.grippers[0]} R ${view.grippers[1]}` +
    ` | ${view.recording ? "RECORDING" : "idle"} | episodes ${view.episodeCount}`;
  banner.textContent = view.banner ?? "";
  banner.style.display = view.banner ? "block" : "none";
  proprioBox.textContent = view.proprio.length ? `proprio ${fmt(view.proprio)}` : "";
}

function redrawPlayback(): void {
  const frame = playback.frameAt(Number(scrubber.value));
  if (!frame) {
    playbackInfo.textContent = playback.error ? `error: ${playback.error}` : "";
    return;
  }
  const info = playback.views[0];
  const b64 = info ? frame.views[info.id] : undefined;
  if (info && b64) drawFrame(playbackCanvas, b64, info);
  playbackInfo.textContent =
    `tick ${frame.tick}/${playback.length - 1}\n` +
    `proprio ${fmt(frame.proprio)}\naction  ${fmt(frame.action)}`;
}

const ws = new WebSocket(wsUrl);

ws.onmessage = (event: MessageEvent) => {
  const msg = parseServerMessage(String(event.data));
  if (!msg) {
    console.warn("skipping malformed frame", event.data);
    return;
  }
  view = applyServer(view, msg);
  playback.handle(msg);
  if (msg.type === "frame" && pointerTarget && controlsEnabled(view)) {
    const arm = view.selectedArm;
    const target = pointerTarget;
    throttle.maybeSend(msg.tick, () => {
      ws.send(buildControlMessage(arm, target, view.grippers[arm]!));
    });
  }
  if (msg.type === "playback_done" || msg.type === "playback_meta") {
    scrubber.max = String(Math.max(playback.length - 1, 0));
    scrubber.value = "0";
  }
  redraw();
  redrawPlayback();
};

ws.onclose = () => {
  view = markClosed(view);
  redraw();
};
ws.onerror = () => {
  view = markClosed(view);
  redraw();
};

workspace.addEventListener("pointermove", (ev: PointerEvent) => {
  const rect = workspace.getBoundingClientRect();
  const px = ((ev.clientX - rect.left) / rect.width) * workspace.width;
  const py = ((ev.clientY - rect.top) / rect.height) * workspace.height;
  pointerTarget = canvasToWorld(mapFor(workspace), px, py);
});

window.addEventListener("keydown", (ev: KeyboardEvent) => {
  const action = keyAction(ev.key);
  if (!action || !controlsEnabled(view)) return;
  if (action.kind === "select_arm") view = selectArm(view, action.arm);
  else if (action.kind === "toggle_gripper") view = toggleGripper(view);
  else ws.send(buildRecordMessage(action.op));
  redraw();
});

(document.getElementById("playback-load") as HTMLButtonElement).onclick = () => {
  playback.reset();
  ws.send(buildPlaybackRequest(playbackPath.value));
};

scrubber.oninput = redrawPlayback;

redraw();
