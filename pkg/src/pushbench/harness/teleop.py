"""Teleoperation bridge: one WebSocket client steers the simulated EE.

Wire protocol (JSON text messages):
  server -> client, every tick:
    {"type": "state", "tick", "ee": [x, y], "t_pose": [x, y, theta],
     "target": [x, y], "reward", "done"}
  client -> server:
    {"type": "target", "x": ..., "y": ...}
    {"type": "episode", "cmd": "start" | "end" | "discard"}

Coordinates are workspace pixels, y-down on the client's canvas. The server
is authoritative: the latest received target point is converted to a clipped
EE offset each tick; a tick without client input applies a zero action.
Completed episodes are appended to the output dataset tagged source="human";
a disconnect mid-episode discards the recording.
"""
from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path

import numpy as np

from ..sim import DEFAULT_CONFIG, IN_DIST_MANIFOLD, Episode, SamplingManifold, SimConfig, reset, reward, step
from ..spaces import WorldAction
from .dataset import Dataset, load_dataset, save_dataset

__all__ = ["TeleopBridge", "serve_teleop"]

log = logging.getLogger(__name__)


class TeleopBridge:
    """Single-session tick loop; transport-agnostic core.

    `send` is an async callable taking the outgoing message dict; incoming
    messages are fed through handle_message(). The tick loop runs until
    stop() or client disconnect.
    """

    def __init__(
        self,
        out_path,
        manifold: SamplingManifold = IN_DIST_MANIFOLD,
        cfg: SimConfig = DEFAULT_CONFIG,
        base_seed: int = 0,
        tick_hz: float = 10.0,
    ):
        self.out_path = Path(out_path)
        self.manifold = manifold
        self.cfg = cfg
        self.base_seed = base_seed
        self.tick_period = 1.0 / tick_hz
        self.tick = 0
        self.episode_count = 0
        self.recording = False
        self.state = reset(base_seed, manifold, cfg)
        self.seed = base_seed
        self.steps: list = []
        self._target: np.ndarray | None = None
        self._stop = asyncio.Event()
        self._done = False

    # -- message handling ---------------------------------------------------

    def handle_message(self, raw: str) -> None:
        try:
            msg = json.loads(raw)
            kind = msg["type"]
            if kind == "target":
                self._target = np.array([float(msg["x"]), float(msg["y"])])
            elif kind == "episode":
                self._episode_cmd(msg["cmd"])
            else:
                log.warning("ignoring message with unknown type %r", kind)
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("ignoring malformed message %r: %s", raw[:80], exc)

    def _episode_cmd(self, cmd: str) -> None:
        if cmd == "start":
            self._begin_episode()
        elif cmd == "end":
            self._finish_episode(keep=True)
        elif cmd == "discard":
            self._finish_episode(keep=False)
        else:
            log.warning("ignoring unknown episode cmd %r", cmd)

    def _begin_episode(self) -> None:
        if self.recording:
            self._finish_episode(keep=False)
        self.seed = self.base_seed + self.episode_count
        self.state = reset(self.seed, self.manifold, self.cfg)
        self.steps = []
        self._target = None
        self._done = False
        self.recording = True

    def _finish_episode(self, keep: bool) -> None:
        if self.recording and keep and self.steps:
            ep = Episode(
                episode_id=self.episode_count,
                seed=self.seed,
                source="human",
                steps=list(self.steps),
                final_state=self.state,
                final_reward=self.steps[-1][2],
                aborted=False,
            )
            self._append_episode(ep)
            self.episode_count += 1
        self.recording = False
        self.steps = []

    def _append_episode(self, ep: Episode) -> None:
        if self.out_path.exists():
            ds = load_dataset(self.out_path, self.cfg)
        else:
            ds = Dataset(episodes=[], sim_config=self.cfg, meta={"source": "teleop"})
        ep.episode_id = len(ds.episodes)
        ds.episodes.append(ep)
        save_dataset(ds, self.out_path)

    def abort_session(self) -> None:
        """Client vanished: drop any half-recorded episode."""
        self.recording = False
        self.steps = []

    # -- tick loop ----------------------------------------------------------

    def tick_once(self) -> dict:
        """Advance the simulator one tick and build the outgoing state message."""
        if self._target is None:
            action = WorldAction(np.zeros(2))
        else:
            delta = self._target - self.state.ee.position
            n = float(np.linalg.norm(delta))
            if n > self.cfg.max_step:
                delta = delta * (self.cfg.max_step / n)
            action = WorldAction(delta)
        out = step(self.state, action, self.cfg)
        applied = WorldAction(action.delta.copy())
        if self.recording and not self._done:
            self.steps.append((self.state, applied, out.reward))
        self.state = out.next
        if out.done and self.recording and not self._done:
            self._done = True
            self._finish_episode(keep=True)
        self.tick += 1
        block = self.state.entities[0]
        return {
            "type": "state",
            "tick": self.tick,
            "ee": [self.state.ee.x, self.state.ee.y],
            "t_pose": [block.x, block.y, block.theta],
            "target": [float(self.state.target[0]), float(self.state.target[1])],
            "reward": reward(self.state, self.cfg),
            "done": out.done,
            "recording": self.recording,
            "episode_count": self.episode_count,
        }

    def stop(self) -> None:
        self._stop.set()

    async def run(self, send, recv_queue: asyncio.Queue) -> None:
        """Drive the fixed-rate tick loop until stopped."""
        loop = asyncio.get_running_loop()
        next_tick = loop.time()
        while not self._stop.is_set():
            while True:  # drain everything that arrived since the last tick
                try:
                    raw = recv_queue.get_nowait()
                except asyncio.QueueEmpty:
                    break
                if raw is None:
                    self.abort_session()
                    return
                self.handle_message(raw)
            msg = self.tick_once()
            try:
                await send(json.dumps(msg))
            except Exception:
                self.abort_session()
                return
            next_tick += self.tick_period
            delay = next_tick - loop.time()
            if delay > 0:
                try:
                    await asyncio.wait_for(self._stop.wait(), timeout=delay)
                except asyncio.TimeoutError:
                    pass


async def serve_teleop(
    port: int,
    out_path,
    manifold: SamplingManifold = IN_DIST_MANIFOLD,
    cfg: SimConfig = DEFAULT_CONFIG,
    base_seed: int = 0,
    tick_hz: float = 10.0,
    ready: asyncio.Event | None = None,
    stop: asyncio.Event | None = None,
) -> None:
    """Serve the bridge on ws://localhost:port. One client at a time; extra
    connections are refused."""
    from websockets.asyncio.server import serve

    busy = asyncio.Lock()

    async def handler(ws):
        if busy.locked():
            await ws.close(code=1013, reason="session in use")
            return
        async with busy:
            bridge = TeleopBridge(out_path, manifold, cfg, base_seed, tick_hz)
            queue: asyncio.Queue = asyncio.Queue()

            async def reader():
                try:
                    async for raw in ws:
                        await queue.put(raw)
                except Exception:
                    pass
                finally:
                    await queue.put(None)

            reader_task = asyncio.create_task(reader())
            try:
                await bridge.run(ws.send, queue)
            finally:
                reader_task.cancel()

    async with serve(handler, "localhost", port):
        if ready is not None:
            ready.set()
        if stop is not None:
            await stop.wait()
        else:
            await asyncio.Future()
