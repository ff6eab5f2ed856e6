// Client-side view state. The server owns the physics; this store only
// mirrors the latest authoritative state message and tracks session
// bookkeeping (status, episode count, staleness).

import type { StateMsg } from "./protocol.js";

export type EpisodeStatus = "idle" | "recording" | "done";

export const STALL_MS = 500;

export class SceneStore {
  latest: StateMsg | null = null;
  lastMsgAt = -Infinity;
  latencyMs = 0;
  status: EpisodeStatus = "idle";
  episodeCount = 0;

  update(msg: StateMsg, now: number): void {
    if (this.lastMsgAt > -Infinity) {
      // smoothed inter-tick latency estimate
      const gap = now - this.lastMsgAt;
      this.latencyMs = this.latencyMs === 0 ? gap : 0.8 * this.latencyMs + 0.2 * gap;
    }
    this.lastMsgAt = now;
    this.latest = msg;
    if (typeof msg.episode_count === "number") {
      this.episodeCount = msg.episode_count;
    }
    if (msg.recording) {
      this.status = msg.done ? "done" : "recording";
    } else if (this.status === "recording") {
      // server closed the episode (done or an end/discard we sent)
      this.status = msg.done ? "done" : "idle";
    }
  }

  requestStart(): void {
    this.status = "recording";
  }

  requestStop(): void {
    this.status = "idle";
  }

  isStalled(now: number): boolean {
    return this.lastMsgAt > -Infinity && now - this.lastMsgAt > STALL_MS;
  }

  isConnected(): boolean {
    return this.latest !== null;
  }
}
