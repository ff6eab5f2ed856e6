import { describe, expect, it } from "vitest";

import type { StateMsg } from "../src/protocol.js";
import { TORUS_RADII } from "../src/protocol.js";
import { render, type Ctx2D } from "../src/render.js";
import { SceneStore, STALL_MS } from "../src/scene.js";

// records drawing calls instead of rasterising
class FakeCtx implements Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;
  arcs: Array<{ x: number; y: number; r: number }> = [];
  texts: string[] = [];
  paths = 0;
  fillRect(): void {}
  beginPath(): void {
    this.paths += 1;
  }
  arc(x: number, y: number, r: number): void {
    this.arcs.push({ x, y, r });
  }
  moveTo(): void {}
  lineTo(): void {}
  closePath(): void {}
  fill(): void {}
  stroke(): void {}
  fillText(text: string): void {
    this.texts.push(text);
  }
}

function msg(over: Partial<StateMsg> = {}): StateMsg {
  return {
    type: "state",
    tick: 3,
    ee: [250, 400],
    t_pose: [180, 220, 0.4],
    target: [256, 256],
    reward: 1.0,
    done: true,
    recording: false,
    episode_count: 2,
    ...over,
  };
}

describe("render", () => {
  it("shows the reward readout at 1.00 when the block sits on the target", () => {
    const scene = new SceneStore();
    scene.update(msg(), 0);
    const ctx = new FakeCtx();
    render(scene, ctx, 10);
    expect(ctx.texts.some((t) => t.includes("reward 1.00"))).toBe(true);
  });

  it("draws the demo torus at 32 and 180 px around the target", () => {
    const scene = new SceneStore();
    scene.update(msg(), 0);
    const ctx = new FakeCtx();
    render(scene, ctx, 10);
    for (const r of TORUS_RADII) {
      expect(ctx.arcs.some((a) => a.r === r && a.x === 256 && a.y === 256)).toBe(true);
    }
  });

  it("overlays the stall warning after 500ms of silence", () => {
    const scene = new SceneStore();
    scene.update(msg(), 1000);
    const ctx = new FakeCtx();
    render(scene, ctx, 1000 + STALL_MS + 50);
    expect(ctx.texts.some((t) => t.includes("connection stalled"))).toBe(true);
  });

  it("renders a waiting banner before any server state arrives", () => {
    const ctx = new FakeCtx();
    render(new SceneStore(), ctx, 0);
    expect(ctx.texts.some((t) => t.includes("waiting"))).toBe(true);
  });
});
