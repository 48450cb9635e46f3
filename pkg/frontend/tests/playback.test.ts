import { describe, expect, it } from "vitest";

import { PlaybackStore } from "../src/playback.js";
import type { PlaybackFrame } from "../src/protocol.js";

function frame(tick: number): PlaybackFrame {
  return {
    type: "playback_frame", tick,
    views: { overhead: "QUJD" },
    proprio: [0.1 * tick, 0, 0, 0, 0, 0, 1, 1],
    action: [0.1 * tick + 0.05, 0, 0, 0, 0, 0, 1, 1],
  };
}

function loaded(n: number): PlaybackStore {
  const store = new PlaybackStore();
  store.handle({ type: "playback_meta", num_steps: n,
                 views: [{ id: "overhead", h: 24, w: 24 }] });
  for (let i = 0; i < n; i++) store.handle(frame(i));
  store.handle({ type: "playback_done" });
  return store;
}

describe("playback store", () => {
  it("collects a full stream and reports consistency", () => {
    const store = loaded(5);
    expect(store.length).toBe(5);
    expect(store.complete).toBe(true);
    expect(store.isConsistent()).toBe(true);
  });

  it("scrub to tick 0 returns the first frame", () => {
    const store = loaded(4);
    expect(store.frameAt(0)?.tick).toBe(0);
  });

  it("playing through an n-step episode advances exactly n frames", () => {
    const store = loaded(7);
    const seen: number[] = [];
    for (let i = 0; i < store.length; i++) seen.push(store.frameAt(i)!.tick);
    expect(seen).toEqual([0, 1, 2, 3, 4, 5, 6]);
  });

  it("clamps out-of-range scrubs", () => {
    const store = loaded(3);
    expect(store.frameAt(-5)?.tick).toBe(0);
    expect(store.frameAt(99)?.tick).toBe(2);
  });

  it("per-tick inspector exposes stored action values", () => {
    const store = loaded(4);
    expect(store.frameAt(2)?.action[0]).toBeCloseTo(0.25, 10);
    expect(store.frameAt(2)?.proprio[0]).toBeCloseTo(0.2, 10);
  });

  it("records stream errors", () => {
    const store = new PlaybackStore();
    store.handle({ type: "error", reason: "cannot read episode: no such file" });
    expect(store.error).toContain("cannot read");
    expect(store.frameAt(0)).toBeUndefined();
  });

  it("a new meta resets previous state", () => {
    const store = loaded(3);
    store.handle({ type: "playback_meta", num_steps: 1, views: [] });
    expect(store.length).toBe(0);
    expect(store.complete).toBe(false);
  });
});
