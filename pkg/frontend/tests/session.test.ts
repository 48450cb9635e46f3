import { describe, expect, it } from "vitest";

import type { FrameMessage, HelloMessage, StatusMessage } from "../src/protocol.js";
import {
  applyServer, controlsEnabled, initialSession, markClosed, selectArm,
  toggleGripper,
} from "../src/session.js";

const hello: HelloMessage = {
  type: "hello", v: "teleop/v1", task: "single_insertion", control_hz: 10,
  views: [{ id: "overhead", h: 48, w: 48 }],
  workspace_rect: [-0.36, -0.06, 0.36, 0.42],
};

function frame(tick: number): FrameMessage {
  return { type: "frame", tick, views: { overhead: "QUJD" }, proprio: [0, 0] };
}

describe("session reducer", () => {
  it("goes live on hello and mirrors task metadata", () => {
    const v = applyServer(initialSession(), hello);
    expect(v.connection).toBe("live");
    expect(v.task).toBe("single_insertion");
    expect(v.controlHz).toBe(10);
    expect(controlsEnabled(v)).toBe(true);
  });

  it("displayed tick never decreases", () => {
    let v = applyServer(initialSession(), hello);
    v = applyServer(v, frame(5));
    expect(v.tick).toBe(5);
    v = applyServer(v, frame(3)); // stale frame dropped
    expect(v.tick).toBe(5);
    v = applyServer(v, frame(6));
    expect(v.tick).toBe(6);
  });

  it("recording indicator mirrors the last server status", () => {
    let v = applyServer(initialSession(), hello);
    const on: StatusMessage = { type: "status", recording: true, episode_count: 0 };
    const off: StatusMessage = { type: "status", recording: false, episode_count: 1 };
    v = applyServer(v, on);
    expect(v.recording).toBe(true);
    v = applyServer(v, off);
    expect(v.recording).toBe(false);
    expect(v.episodeCount).toBe(1);
  });

  it("refusal disables controls with a banner", () => {
    let v = applyServer(initialSession(), hello);
    v = applyServer(v, { type: "error", reason: "session in use; one operator at a time" });
    expect(v.connection).toBe("refused");
    expect(v.banner).toContain("session in use");
    expect(controlsEnabled(v)).toBe(false);
  });

  it("disconnect shows a banner and disables controls", () => {
    let v = applyServer(initialSession(), hello);
    v = markClosed(v);
    expect(v.connection).toBe("closed");
    expect(v.banner).toBe("disconnected");
    expect(controlsEnabled(v)).toBe(false);
  });

  it("gripper toggle alternates between 0 and 1 per selected arm", () => {
    let v = applyServer(initialSession(), hello);
    expect(v.grippers).toEqual([1, 1]);
    v = toggleGripper(v);
    expect(v.grippers).toEqual([0, 1]);
    v = toggleGripper(v);
    expect(v.grippers).toEqual([1, 1]);
    v = selectArm(v, 1);
    v = toggleGripper(v);
    expect(v.grippers).toEqual([1, 0]);
  });
});
