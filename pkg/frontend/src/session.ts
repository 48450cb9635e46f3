/**
 * Live-session state: a pure reducer over server messages plus local input.
 * All state of record lives server-side; this mirror only drives the UI.
 */

import type { Arm, ServerMessage, ViewInfo } from "./protocol.js";

export type ConnectionState = "connecting" | "live" | "refused" | "closed";

export interface SessionView {
  connection: ConnectionState;
  task: string;
  controlHz: number;
  views: ViewInfo[];
  workspaceRect: [number, number, number, number];
  tick: number;
  frames: Record<string, string>;
  proprio: number[];
  recording: boolean;
  episodeCount: number;
  selectedArm: Arm;
  grippers: [number, number];
  banner: string | null;
}

export function initialSession(): SessionView {
  return {
    connection: "connecting",
    task: "",
    controlHz: 0,
    views: [],
    workspaceRect: [-0.36, -0.06, 0.36, 0.42],
    tick: -1,
    frames: {},
    proprio: [],
    recording: false,
    episodeCount: 0,
    selectedArm: 0,
    grippers: [1, 1],
    banner: null,
  };
}

/** Fold one validated server message into the view. */
export function applyServer(view: SessionView, msg: ServerMessage): SessionView {
  switch (msg.type) {
    case "hello":
      return {
        ...view,
        connection: "live",
        task: msg.task,
        controlHz: msg.control_hz,
        views: msg.views,
        workspaceRect: msg.workspace_rect,
        banner: null,
      };
    case "frame":
      if (msg.tick <= view.tick) return view; // displayed tick never decreases
      return { ...view, tick: msg.tick, frames: msg.views, proprio: msg.proprio };
    case "status":
      return { ...view, recording: msg.recording, episodeCount: msg.episode_count };
    case "error":
      if (msg.reason.includes("session in use")) {
        return { ...view, connection: "refused", banner: msg.reason };
      }
      return { ...view, banner: msg.reason };
    default:
      return view;
  }
}

export function markClosed(view: SessionView): SessionView {
  if (view.connection === "refused") return view;
  return { ...view, connection: "closed", banner: "disconnected" };
}

export function selectArm(view: SessionView, arm: Arm): SessionView {
  return { ...view, selectedArm: arm };
}

/** Toggle the selected arm's gripper command between open (1) and closed (0). */
export function toggleGripper(view: SessionView): SessionView {
  const grippers: [number, number] = [...view.grippers];
  grippers[view.selectedArm] = grippers[view.selectedArm] === 0 ? 1 : 0;
  return { ...view, grippers };
}

export function controlsEnabled(view: SessionView): boolean {
  return view.connection === "live";
}
