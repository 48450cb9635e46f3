/**
 * Playback store: collects the server-decoded episode stream and exposes a
 * scrubber over ticks with a per-tick action/proprio inspector.
 */

import type { PlaybackFrame, PlaybackMeta, ServerMessage, ViewInfo } from "./protocol.js";

export class PlaybackStore {
  views: ViewInfo[] = [];
  expected = 0;
  frames: PlaybackFrame[] = [];
  complete = false;
  error: string | null = null;

  reset(): void {
    this.views = [];
    this.expected = 0;
    this.frames = [];
    this.complete = false;
    this.error = null;
  }

  /** Feed playback-related server messages; others are ignored. */
  handle(msg: ServerMessage): void {
    switch (msg.type) {
      case "playback_meta": {
        this.reset();
        const meta = msg as PlaybackMeta;
        this.views = meta.views;
        this.expected = meta.num_steps;
        break;
      }
      case "playback_frame":
        this.frames.push(msg as PlaybackFrame);
        break;
      case "playback_done":
        this.complete = true;
        break;
      case "error":
        this.error = msg.reason;
        break;
      default:
        break;
    }
  }

  get length(): number {
    return this.frames.length;
  }

  /** Frame at a scrubber position, clamped into range. */
  frameAt(tick: number): PlaybackFrame | undefined {
    if (this.frames.length === 0) return undefined;
    const i = Math.min(Math.max(Math.round(tick), 0), this.frames.length - 1);
    return this.frames[i];
  }

  isConsistent(): boolean {
    return this.complete && this.frames.length === this.expected &&
      this.frames.every((f, i) => f.tick === i);
  }
}
