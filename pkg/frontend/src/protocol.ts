// Wire protocol of the teleop bridge. Coordinates are workspace pixels,
// y-down, 1:1 with the canvas.

export interface StateMsg {
  type: "state";
  tick: number;
  ee: [number, number];
  t_pose: [number, number, number];
  target: [number, number];
  reward: number;
  done: boolean;
  recording?: boolean;
  episode_count?: number;
}

export type ServerMsg = StateMsg;

export type ClientMsg =
  | { type: "target"; x: number; y: number }
  | { type: "episode"; cmd: "start" | "end" | "discard" };

export function parseServerMsg(raw: string): ServerMsg | null {
  try {
    const msg = JSON.parse(raw);
    if (msg && msg.type === "state" && Array.isArray(msg.ee) && Array.isArray(msg.t_pose)) {
      return msg as StateMsg;
    }
  } catch {
    // malformed frames are dropped; the next tick supersedes them anyway
  }
  return null;
}

// Workspace constants mirroring the simulator defaults. The bridge streams
// only poses; the block outline and torus radii are fixed configuration.
export const WORKSPACE = 512;
export const EE_RADIUS = 15;
export const TORUS_RADII: [number, number] = [32, 180];

// T block outline in its local frame (origin = anchor point).
export const T_VERTICES: Array<[number, number]> = [
  [-60, -30],
  [60, -30],
  [60, 0],
  [15, 0],
  [15, 90],
  [-15, 90],
  [-15, 0],
  [-60, 0],
];
