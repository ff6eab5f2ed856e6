// Pointer-as-target input: the current pointer position is sent as the
// desired EE point, at most one target message per received server tick, and
// only while recording. Out-of-bounds pointers repeat the last in-bounds
// target so the EE holds rather than chasing the cursor off the table.

import type { ClientMsg } from "./protocol.js";
import { WORKSPACE } from "./protocol.js";

export class InputLoop {
  private pointer: { x: number; y: number } | null = null;
  private lastSentTick = -1;
  active = false;

  onPointer(x: number, y: number): void {
    if (x >= 0 && x <= WORKSPACE && y >= 0 && y <= WORKSPACE) {
      this.pointer = { x, y };
    }
    // outside the canvas: keep the previous in-bounds target
  }

  // Called once per received state tick; returns the message to send, if any.
  onTick(tick: number): ClientMsg | null {
    if (!this.active || this.pointer === null) {
      return null;
    }
    if (tick === this.lastSentTick) {
      return null; // never more than one target per server tick
    }
    this.lastSentTick = tick;
    return { type: "target", x: this.pointer.x, y: this.pointer.y };
  }

  start(): ClientMsg {
    this.active = true;
    return { type: "episode", cmd: "start" };
  }

  end(): ClientMsg {
    this.active = false;
    return { type: "episode", cmd: "end" };
  }

  discard(): ClientMsg {
    this.active = false;
    this.pointer = null;
    return { type: "episode", cmd: "discard" };
  }
}
