// Wire-up: WebSocket to the bridge, canvas rendering at display rate, pointer
// capture, episode buttons. The client never simulates; it draws whatever
// state the server last sent and forwards intent.

import { InputLoop } from "./input.js";
import { parseServerMsg, WORKSPACE, type ClientMsg } from "./protocol.js";
import { render, type Ctx2D } from "./render.js";
import { SceneStore } from "./scene.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("scene");
canvas.width = WORKSPACE;
canvas.height = WORKSPACE;
const ctx = canvas.getContext("2d") as unknown as Ctx2D;

const scene = new SceneStore();
const input = new InputLoop();

const url = new URL(window.location.href);
const port = url.searchParams.get("port") ?? "8765";
const ws = new WebSocket(`ws://${url.hostname || "localhost"}:${port}`);

function send(msg: ClientMsg): void {
  if (ws.readyState === WebSocket.OPEN) {
    ws.send(JSON.stringify(msg));
  }
}

ws.onmessage = (ev) => {
  const msg = parseServerMsg(String(ev.data));
  if (msg === null) return;
  scene.update(msg, performance.now());
  const target = input.onTick(msg.tick);
  if (target) send(target);
};

canvas.addEventListener("pointermove", (ev) => {
  const rect = canvas.getBoundingClientRect();
  input.onPointer(ev.clientX - rect.left, ev.clientY - rect.top);
});

el<HTMLButtonElement>("start").onclick = () => {
  scene.requestStart();
  send(input.start());
};
el<HTMLButtonElement>("end").onclick = () => {
  scene.requestStop();
  send(input.end());
};
el<HTMLButtonElement>("discard").onclick = () => {
  scene.requestStop();
  send(input.discard());
};

function frame(): void {
  render(scene, ctx, performance.now());
  requestAnimationFrame(frame);
}
frame();
