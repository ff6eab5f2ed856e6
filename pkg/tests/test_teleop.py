"""Teleop bridge driven by a scripted synthetic client."""
import asyncio
import json

import numpy as np
import pytest

from pushbench.harness.dataset import load_dataset
from pushbench.harness.teleop import TeleopBridge, serve_teleop
from pushbench.sim import DEFAULT_CONFIG, IN_DIST_MANIFOLD, anchor_point, step
from pushbench.spaces import WorldAction


class TestBridgeCore:
    """Transport-free tests against the tick core."""

    def _bridge(self, tmp_path):
        return TeleopBridge(tmp_path / "out.jsonl", IN_DIST_MANIFOLD, base_seed=3, tick_hz=1000)

    def test_no_input_zero_action(self, tmp_path):
        b = self._bridge(tmp_path)
        before = b.state
        msg = b.tick_once()
        assert np.allclose(b.state.ee.position, before.ee.position)
        assert msg["type"] == "state"
        assert msg["tick"] == 1

    def test_target_converted_to_clipped_delta(self, tmp_path):
        b = self._bridge(tmp_path)
        start = b.state.ee.position.copy()
        b.handle_message(json.dumps({"type": "target", "x": float(start[0] + 500), "y": float(start[1])}))
        b.tick_once()
        moved = b.state.ee.position - start
        assert np.linalg.norm(moved) <= DEFAULT_CONFIG.max_step + 1e-9

    def test_malformed_messages_ignored(self, tmp_path):
        b = self._bridge(tmp_path)
        before = b.state
        for raw in ("not json", '{"type": "target"}', '{"no": "type"}', '{"type": "bogus"}'):
            b.handle_message(raw)
        b.tick_once()
        assert np.allclose(b.state.ee.position, before.ee.position)

    def test_episode_recording_and_persistence(self, tmp_path):
        b = self._bridge(tmp_path)
        b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
        assert b.recording
        tgt = b.state.target
        for _ in range(5):
            b.handle_message(json.dumps({"type": "target", "x": float(tgt[0]), "y": float(tgt[1])}))
            b.tick_once()
        b.handle_message(json.dumps({"type": "episode", "cmd": "end"}))
        assert not b.recording
        assert b.episode_count == 1
        ds = load_dataset(tmp_path / "out.jsonl")
        assert len(ds) == 1
        assert ds.episodes[0].source == "human"
        assert len(ds.episodes[0].steps) == 5

    def test_discard_drops_episode(self, tmp_path):
        b = self._bridge(tmp_path)
        b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
        b.tick_once()
        b.handle_message(json.dumps({"type": "episode", "cmd": "discard"}))
        assert b.episode_count == 0
        assert not (tmp_path / "out.jsonl").exists()

    def test_disconnect_aborts_episode(self, tmp_path):
        b = self._bridge(tmp_path)
        b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
        b.tick_once()
        b.abort_session()
        assert not b.recording
        assert not (tmp_path / "out.jsonl").exists()

    def test_recorded_episode_replays_bit_identical(self, tmp_path):
        # drive a scripted session, then replay the stored actions open-loop
        b = self._bridge(tmp_path)
        b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
        rng = np.random.default_rng(0)
        for _ in range(30):
            ee = b.state.ee.position
            wiggle = ee + rng.uniform(-40, 40, 2)
            b.handle_message(json.dumps({"type": "target", "x": float(wiggle[0]), "y": float(wiggle[1])}))
            b.tick_once()
        b.handle_message(json.dumps({"type": "episode", "cmd": "end"}))
        live_final = b.state

        ds = load_dataset(tmp_path / "out.jsonl")
        ep = ds.episodes[0]
        state = ep.steps[0][0]
        for s_rec, action, _ in ep.steps:
            assert state.ee == s_rec.ee
            assert state.entities == s_rec.entities
            state = step(state, action, DEFAULT_CONFIG).next
        assert state.ee == live_final.ee
        assert state.entities == live_final.entities

    def test_sessions_grow_dataset(self, tmp_path):
        b = self._bridge(tmp_path)
        for _ in range(3):
            b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
            b.tick_once()
            b.tick_once()
            b.handle_message(json.dumps({"type": "episode", "cmd": "end"}))
        assert b.episode_count == 3
        assert len(load_dataset(tmp_path / "out.jsonl")) == 3


class TestBridgeOverWebsocket:
    def test_synthetic_client_session(self, tmp_path):
        async def scenario():
            from websockets.asyncio.client import connect

            stop = asyncio.Event()
            ready = asyncio.Event()
            port = 8976
            server = asyncio.create_task(
                serve_teleop(
                    port,
                    tmp_path / "ws.jsonl",
                    IN_DIST_MANIFOLD,
                    base_seed=1,
                    tick_hz=200.0,
                    ready=ready,
                    stop=stop,
                )
            )
            await asyncio.wait_for(ready.wait(), 5)
            async with connect(f"ws://localhost:{port}") as ws:
                await ws.send(json.dumps({"type": "episode", "cmd": "start"}))
                # steer toward the block's anchor for a while, then end
                for _ in range(40):
                    msg = json.loads(await asyncio.wait_for(ws.recv(), 5))
                    assert msg["type"] == "state"
                    assert set(msg) >= {"tick", "ee", "t_pose", "target", "reward", "done"}
                    await ws.send(
                        json.dumps({"type": "target", "x": msg["t_pose"][0], "y": msg["t_pose"][1]})
                    )
                await ws.send(json.dumps({"type": "episode", "cmd": "end"}))
                for _ in range(5):  # let the command be processed
                    msg = json.loads(await asyncio.wait_for(ws.recv(), 5))
                    if msg["episode_count"] == 1:
                        break
                assert msg["episode_count"] == 1
            stop.set()
            await asyncio.wait_for(server, 5)

            ds = load_dataset(tmp_path / "ws.jsonl")
            assert len(ds) == 1
            assert ds.episodes[0].source == "human"
            # open-loop replay reproduces the recorded trajectory bit for bit
            ep = ds.episodes[0]
            state = ep.steps[0][0]
            for s_rec, action, _ in ep.steps:
                assert state.ee == s_rec.ee and state.entities == s_rec.entities
                state = step(state, action, DEFAULT_CONFIG).next

        asyncio.run(scenario())

    def test_second_connection_refused(self, tmp_path):
        async def scenario():
            from websockets.asyncio.client import connect
            from websockets.exceptions import ConnectionClosed

            stop = asyncio.Event()
            ready = asyncio.Event()
            port = 8977
            server = asyncio.create_task(
                serve_teleop(
                    port, tmp_path / "x.jsonl", IN_DIST_MANIFOLD, tick_hz=200.0,
                    ready=ready, stop=stop,
                )
            )
            await asyncio.wait_for(ready.wait(), 5)
            async with connect(f"ws://localhost:{port}") as first:
                await asyncio.wait_for(first.recv(), 5)
                async with connect(f"ws://localhost:{port}") as second:
                    with pytest.raises(ConnectionClosed):
                        await asyncio.wait_for(second.recv(), 5)
            stop.set()
            await asyncio.wait_for(server, 5)

        asyncio.run(scenario())


class TestTeleopDatasetTrains:
    def test_human_dataset_accepted_by_training(self, tmp_path):
        # a (synthetic) human session produces a file `train` consumes unchanged
        b = TeleopBridge(tmp_path / "h.jsonl", IN_DIST_MANIFOLD, base_seed=2, tick_hz=1000)
        for k in range(2):
            b.handle_message(json.dumps({"type": "episode", "cmd": "start"}))
            for _ in range(20):
                anchor = anchor_point(b.state)
                b.handle_message(json.dumps({"type": "target", "x": float(anchor[0]), "y": float(anchor[1])}))
                b.tick_once()
            b.handle_message(json.dumps({"type": "episode", "cmd": "end"}))

        from pushbench.harness.cli import main

        out = tmp_path / "run"
        rc = main(
            [
                "train",
                "--dataset", str(tmp_path / "h.jsonl"),
                "--space", "t2",
                "--kind", "mlp",
                "--seed", "0",
                "--epochs", "2",
                "--out", str(out),
            ]
        )
        assert rc == 0
        assert list(out.glob("*.ckpt"))
