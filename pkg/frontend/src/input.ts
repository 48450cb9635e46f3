/**
 * Pointer and keyboard mapping.
 *
 * The workspace canvas is an axis-aligned window onto the world rectangle;
 * pointer positions map affinely to world (x, y) with the y axis flipped
 * (canvas rows grow downward). Control messages are throttled to at most one
 * per received frame tick: the server acknowledges by ticking forward.
 */

import type { Arm, RecordOp } from "./protocol.js";

export interface WorkspaceMap {
  rect: [number, number, number, number]; // world x0, y0, x1, y1
  width: number; // canvas pixels
  height: number;
}

export function canvasToWorld(map: WorkspaceMap, px: number, py: number): [number, number] {
  const [x0, y0, x1, y1] = map.rect;
  const x = x0 + (px / map.width) * (x1 - x0);
  const y = y1 - (py / map.height) * (y1 - y0);
  return [x, y];
}

export function worldToCanvas(map: WorkspaceMap, x: number, y: number): [number, number] {
  const [x0, y0, x1, y1] = map.rect;
  const px = ((x - x0) / (x1 - x0)) * map.width;
  const py = ((y1 - y) / (y1 - y0)) * map.height;
  return [px, py];
}

/** At most one in-flight control message per acknowledged frame tick. */
export class ControlThrottle {
  private lastSentTick = Number.NEGATIVE_INFINITY;

  maybeSend(currentTick: number, send: () => void): boolean {
    if (currentTick <= this.lastSentTick) return false;
    this.lastSentTick = currentTick;
    send();
    return true;
  }
}

export type KeyAction =
  | { kind: "select_arm"; arm: Arm }
  | { kind: "toggle_gripper" }
  | { kind: "record"; op: RecordOp }
  | null;

/** Keyboard map: 1/2 select arm, g toggles the gripper, r/s/d record ops. */
export function keyAction(key: string): KeyAction {
  switch (key) {
    case "1":
      return { kind: "select_arm", arm: 0 };
    case "2":
      return { kind: "select_arm", arm: 1 };
    case "g":
      return { kind: "toggle_gripper" };
    case "r":
      return { kind: "record", op: "start" };
    case "s":
      return { kind: "record", op: "stop" };
    case "d":
      return { kind: "record", op: "discard" };
    default:
      return null;
  }
}
