/**
 * teleop/v1 wire protocol: message types, canonical serializers and guards.
 *
 * Client messages are serialized with a fixed key order so the bytes match
 * the shared fixtures exactly; server messages are validated structurally
 * before use and malformed frames are dropped by the caller.
 */

export const PROTOCOL_VERSION = "teleop/v1";

export type Arm = 0 | 1;
export type RecordOp = "start" | "stop" | "discard";

export interface ControlMessage {
  type: "control";
  arm: Arm;
  target_xy: [number, number];
  gripper: number;
}

export interface RecordMessage {
  type: "record";
  op: RecordOp;
}

export interface PlaybackRequest {
  type: "playback";
  path: string;
}

export type ClientMessage = ControlMessage | RecordMessage | PlaybackRequest;

export interface ViewInfo {
  id: string;
  h: number;
  w: number;
}

export interface HelloMessage {
  type: "hello";
  v: string;
  task: string;
  control_hz: number;
  views: ViewInfo[];
  workspace_rect: [number, number, number, number];
}

export interface FrameMessage {
  type: "frame";
  tick: number;
  views: Record<string, string>; // base64 raw RGB per view id
  proprio: number[];
}

export interface StatusMessage {
  type: "status";
  recording: boolean;
  episode_count: number;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export interface PlaybackMeta {
  type: "playback_meta";
  num_steps: number;
  views: ViewInfo[];
}

export interface PlaybackFrame {
  type: "playback_frame";
  tick: number;
  views: Record<string, string>;
  proprio: number[];
  action: number[];
}

export interface PlaybackDone {
  type: "playback_done";
}

export type ServerMessage =
  | HelloMessage
  | FrameMessage
  | StatusMessage
  | ErrorMessage
  | PlaybackMeta
  | PlaybackFrame
  | PlaybackDone;

/** Serialize a control message byte-identically to the protocol fixtures. */
export function buildControlMessage(
  arm: Arm,
  targetXy: [number, number],
  gripper: number,
): string {
  return JSON.stringify({ type: "control", arm, target_xy: targetXy, gripper });
}

export function buildRecordMessage(op: RecordOp): string {
  return JSON.stringify({ type: "record", op });
}

export function buildPlaybackRequest(path: string): string {
  return JSON.stringify({ type: "playback", path });
}

function isNumberArray(v: unknown, n?: number): v is number[] {
  return Array.isArray(v) && (n === undefined || v.length === n) &&
    v.every((x) => typeof x === "number" && Number.isFinite(x));
}

function isViewList(v: unknown): v is ViewInfo[] {
  return Array.isArray(v) && v.every((e) =>
    typeof e === "object" && e !== null &&
    typeof (e as ViewInfo).id === "string" &&
    typeof (e as ViewInfo).h === "number" &&
    typeof (e as ViewInfo).w === "number");
}

function isStringMap(v: unknown): v is Record<string, string> {
  return typeof v === "object" && v !== null && !Array.isArray(v) &&
    Object.values(v).every((x) => typeof x === "string");
}

/** Parse and validate one server message; null when malformed. */
export function parseServerMessage(raw: string): ServerMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const m = msg as Record<string, unknown>;
  switch (m.type) {
    case "hello":
      return typeof m.v === "string" && typeof m.task === "string" &&
        typeof m.control_hz === "number" && isViewList(m.views) &&
        isNumberArray(m.workspace_rect, 4)
        ? (msg as HelloMessage) : null;
    case "frame":
      return typeof m.tick === "number" && isStringMap(m.views) &&
        isNumberArray(m.proprio)
        ? (msg as FrameMessage) : null;
    case "status":
      return typeof m.recording === "boolean" &&
        typeof m.episode_count === "number"
        ? (msg as StatusMessage) : null;
    case "error":
      return typeof m.reason === "string" ? (msg as ErrorMessage) : null;
    case "playback_meta":
      return typeof m.num_steps === "number" && isViewList(m.views)
        ? (msg as PlaybackMeta) : null;
    case "playback_frame":
      return typeof m.tick === "number" && isStringMap(m.views) &&
        isNumberArray(m.proprio) && isNumberArray(m.action)
        ? (msg as PlaybackFrame) : null;
    case "playback_done":
      return msg as PlaybackDone;
    default:
      return null;
  }
}
