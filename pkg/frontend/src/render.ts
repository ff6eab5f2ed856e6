// Canvas renderer: workspace, demo torus, target, T block at its streamed
// pose, EE disc, reward readout, stalled overlay. 1:1 pixel mapping, y-down
// (canvas-native, matching the wire protocol).

import type { SceneStore } from "./scene.js";
import { EE_RADIUS, TORUS_RADII, T_VERTICES, WORKSPACE } from "./protocol.js";

export interface Ctx2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export function render(scene: SceneStore, ctx: Ctx2D, now: number): void {
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#14161a";
  ctx.fillRect(0, 0, WORKSPACE, WORKSPACE);

  const msg = scene.latest;
  if (msg === null) {
    ctx.fillStyle = "#aaaaaa";
    ctx.font = "16px sans-serif";
    ctx.fillText("waiting for bridge...", 170, 256);
    return;
  }

  // demo torus
  ctx.strokeStyle = "#c43c3c";
  ctx.lineWidth = 1.5;
  for (const r of TORUS_RADII) {
    ctx.beginPath();
    ctx.arc(msg.target[0], msg.target[1], r, 0, 2 * Math.PI);
    ctx.stroke();
  }

  // target cross
  ctx.strokeStyle = "#e05050";
  ctx.beginPath();
  ctx.moveTo(msg.target[0] - 8, msg.target[1]);
  ctx.lineTo(msg.target[0] + 8, msg.target[1]);
  ctx.moveTo(msg.target[0], msg.target[1] - 8);
  ctx.lineTo(msg.target[0], msg.target[1] + 8);
  ctx.stroke();

  // T block at its pose
  const [bx, by, th] = msg.t_pose;
  const c = Math.cos(th);
  const s = Math.sin(th);
  ctx.fillStyle = "#8a8f98";
  ctx.beginPath();
  T_VERTICES.forEach(([vx, vy], i) => {
    const wx = bx + c * vx - s * vy;
    const wy = by + s * vx + c * vy;
    if (i === 0) ctx.moveTo(wx, wy);
    else ctx.lineTo(wx, wy);
  });
  ctx.closePath();
  ctx.fill();

  // EE disc
  ctx.fillStyle = "#4ea1ff";
  ctx.beginPath();
  ctx.arc(msg.ee[0], msg.ee[1], EE_RADIUS, 0, 2 * Math.PI);
  ctx.fill();

  // readouts
  ctx.fillStyle = "#e8e8e8";
  ctx.font = "13px monospace";
  ctx.fillText(`reward ${msg.reward.toFixed(2)}`, 10, 20);
  ctx.fillText(`episodes ${scene.episodeCount}  [${scene.status}]`, 10, 38);
  if (msg.done) {
    ctx.fillText("done", 10, 56);
  }

  if (scene.isStalled(now)) {
    ctx.globalAlpha = 0.75;
    ctx.fillStyle = "#000000";
    ctx.fillRect(0, WORKSPACE / 2 - 28, WORKSPACE, 56);
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#ff6464";
    ctx.font = "18px sans-serif";
    ctx.fillText("connection stalled", 180, WORKSPACE / 2 + 6);
  }
}
