"""Demonstration dataset: collection, persistence, hashing.

File format: line-delimited JSON. The first record is a header carrying the
format version, a SimConfig content hash and the block geometry; every other
record is one step: {episode_id, t, source, seed, state, action, reward}.
Numbers are serialised with repr-roundtripping floats, so save -> load ->
save is byte-identical.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import Pose2
from ..sim import (
    DEFAULT_CONFIG,
    Episode,
    SamplingManifold,
    SimConfig,
    reset,
    rollout,
    scripted_demonstrator,
)
from ..spaces import WorldAction, WorldState

__all__ = ["Dataset", "collect_scripted", "save_dataset", "load_dataset", "dataset_hash"]

FORMAT_VERSION = 1


@dataclass
class Dataset:
    episodes: list[Episode] = field(default_factory=list)
    sim_config: SimConfig = DEFAULT_CONFIG
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.episodes)

    def n_steps(self) -> int:
        return sum(len(ep.steps) for ep in self.episodes)

    def content_hash(self) -> str:
        return hashlib.sha256(_serialise(self).encode()).hexdigest()


def collect_scripted(
    n: int,
    manifold: SamplingManifold,
    base_seed: int = 0,
    cfg: SimConfig = DEFAULT_CONFIG,
    quality_threshold: float = 0.9,
) -> Dataset:
    """Collect n demonstration episodes with the scripted controller.

    Episodes finishing below the quality threshold are discarded and the seed
    stream simply continues, so the result is a pure function of
    (n, manifold, base_seed). A discard rate above 50% aborts: the controller
    has regressed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    episodes: list[Episode] = []
    discarded = 0
    attempt = 0
    while len(episodes) < n:
        seed = base_seed + attempt
        attempt += 1
        init = reset(seed, manifold, cfg)
        ep = rollout(
            lambda s: scripted_demonstrator(s, cfg),
            init,
            cfg,
            episode_id=len(episodes),
            seed=seed,
            source="scripted",
        )
        if ep.final_reward >= quality_threshold and not ep.aborted:
            episodes.append(ep)
        else:
            discarded += 1
            if discarded > max(10, attempt // 2):
                raise RuntimeError(
                    f"demonstrator discard rate too high: {discarded}/{attempt} "
                    f"episodes below {quality_threshold}"
                )
    return Dataset(
        episodes=episodes,
        sim_config=cfg,
        meta={"manifold": manifold.to_dict(), "base_seed": base_seed, "n": n},
    )


def _state_record(s: WorldState) -> dict:
    return {
        "ee": [s.ee.x, s.ee.y],
        "entities": [[e.x, e.y, e.theta] for e in s.entities],
        "target": [float(s.target[0]), float(s.target[1])],
    }


def _state_from_record(d: dict, t: int) -> WorldState:
    return WorldState(
        ee=Pose2(d["ee"][0], d["ee"][1], 0.0),
        entities=tuple(Pose2(x, y, th) for x, y, th in d["entities"]),
        target=np.array(d["target"], dtype=float),
        t=t,
    )


def _serialise(ds: Dataset) -> str:
    header = {
        "format_version": FORMAT_VERSION,
        "sim_config": ds.sim_config.content_key(),
        "t_geometry": ds.sim_config.t_vertices.tolist(),
        "anchor_offset": ds.sim_config.anchor_offset.tolist(),
        "meta": ds.meta,
        "n_episodes": len(ds.episodes),
    }
    lines = [json.dumps(header)]
    for ep in ds.episodes:
        for t, (s, a, r) in enumerate(ep.steps):
            rec = {
                "episode_id": ep.episode_id,
                "t": t,
                "source": ep.source,
                "seed": ep.seed,
                "state": _state_record(s),
                "action": [float(a.delta[0]), float(a.delta[1])],
                "reward": r,
            }
            lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def save_dataset(ds: Dataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_serialise(ds))
    return path


def load_dataset(path, cfg: SimConfig = DEFAULT_CONFIG) -> Dataset:
    """Read a dataset file back. Steps are regrouped into episodes in file
    order; the final state/reward of each episode are recomputed by replaying
    nothing — the stored last reward is authoritative."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValueError(f"{path} is empty")
    header = json.loads(lines[0])
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported dataset format {header.get('format_version')}")
    by_ep: dict[int, list[dict]] = {}
    order: list[int] = []
    for line in lines[1:]:
        rec = json.loads(line)
        eid = rec["episode_id"]
        if eid not in by_ep:
            by_ep[eid] = []
            order.append(eid)
        by_ep[eid].append(rec)
    episodes = []
    for eid in order:
        recs = sorted(by_ep[eid], key=lambda r: r["t"])
        steps = [
            (
                _state_from_record(r["state"], r["t"]),
                WorldAction(np.array(r["action"], dtype=float)),
                r["reward"],
            )
            for r in recs
        ]
        episodes.append(
            Episode(
                episode_id=eid,
                seed=recs[0]["seed"],
                source=recs[0]["source"],
                steps=steps,
                final_state=steps[-1][0],  # last recorded state; terminal not stored
                final_reward=recs[-1]["reward"],
                aborted=False,
            )
        )
    return Dataset(episodes=episodes, sim_config=cfg, meta=header.get("meta", {}))


def dataset_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
