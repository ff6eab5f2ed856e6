"""Distance-binned OOD evaluation.

Every condition (problem space, policy class, training seed) is rolled out
from the same fixed list of initial states, derived only from (EvalSpec,
eval_seed). Final rewards are grouped into bins of normalised distance from
the in-distribution manifold: bin 0 is the in-distribution bin, the remaining
bins split (0, 1] evenly.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..learn import Checkpoint, ddpm_sample_batch
from ..sim import (
    DEFAULT_CONFIG,
    IN_DIST_MANIFOLD,
    OOD_MANIFOLD,
    SamplingManifold,
    SimConfig,
    anchor_point,
    reset,
    reward,
    step,
)
from ..spaces import WorldState
from .policies import MlpPolicy, RecedingHorizonExecutor

__all__ = [
    "EvalSpec",
    "EvalReport",
    "distance_to_manifold",
    "evaluation_states",
    "evaluate",
    "rollout_many",
    "states_hash",
]


@dataclass(frozen=True)
class EvalSpec:
    in_dist_manifold: SamplingManifold = IN_DIST_MANIFOLD
    ood_manifold: SamplingManifold = OOD_MANIFOLD
    n_in_dist: int = 100
    n_ood: int = 400
    bins: int = 5
    eval_seed: int = 5_000_000

    def __post_init__(self) -> None:
        if self.in_dist_manifold.r_max > self.ood_manifold.r_min:
            raise ValueError("manifolds overlap in radius")
        if self.bins < 2:
            raise ValueError("need at least the in-dist bin plus one OOD bin")

    def to_dict(self) -> dict:
        return {
            "in_dist_manifold": self.in_dist_manifold.to_dict(),
            "ood_manifold": self.ood_manifold.to_dict(),
            "n_in_dist": self.n_in_dist,
            "n_ood": self.n_ood,
            "bins": self.bins,
            "eval_seed": self.eval_seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalSpec":
        return EvalSpec(
            in_dist_manifold=SamplingManifold.from_dict(d["in_dist_manifold"]),
            ood_manifold=SamplingManifold.from_dict(d["ood_manifold"]),
            n_in_dist=int(d["n_in_dist"]),
            n_ood=int(d["n_ood"]),
            bins=int(d["bins"]),
            eval_seed=int(d["eval_seed"]),
        )


def distance_to_manifold(initial_position, spec: EvalSpec, cfg: SimConfig = DEFAULT_CONFIG) -> float:
    """0 inside the demo torus, rising linearly to 1 at the outer OOD radius."""
    r = float(np.linalg.norm(np.asarray(initial_position, dtype=float) - cfg.target))
    r_in = spec.in_dist_manifold.r_max
    r_out = spec.ood_manifold.r_max
    if r <= r_in:
        return 0.0
    return min(1.0, (r - r_in) / (r_out - r_in))


def evaluation_states(spec: EvalSpec, cfg: SimConfig = DEFAULT_CONFIG) -> list[WorldState]:
    """The fixed evaluation set: depends only on (spec, cfg), never on the
    policy under test."""
    states = [reset(spec.eval_seed + i, spec.in_dist_manifold, cfg) for i in range(spec.n_in_dist)]
    states += [
        reset(spec.eval_seed + 100_000 + j, spec.ood_manifold, cfg) for j in range(spec.n_ood)
    ]
    return states


def states_hash(states: list[WorldState]) -> str:
    h = hashlib.sha256()
    for s in states:
        h.update(repr((s.ee.x, s.ee.y, [(e.x, e.y, e.theta) for e in s.entities])).encode())
    return h.hexdigest()


@dataclass
class EvalReport:
    bins: list[dict]  # {lo, hi, mean_distance, mean_reward, count}
    episodes: list[dict]  # {x, y, theta, distance, bin, final_reward, steps}
    meta: dict = field(default_factory=dict)

    @property
    def bin_means(self) -> list[float]:
        return [b["mean_reward"] for b in self.bins]

    def occupied_bins(self, min_count: int = 1) -> list[int]:
        return [i for i, b in enumerate(self.bins) if b["count"] >= min_count]

    def to_dict(self) -> dict:
        return {"bins": self.bins, "episodes": self.episodes, "meta": self.meta}

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        return EvalReport(bins=d["bins"], episodes=d["episodes"], meta=d.get("meta", {}))

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path

    @staticmethod
    def load(path) -> "EvalReport":
        return EvalReport.from_dict(json.loads(Path(path).read_text()))


def _assign_bin(distance: float, n_bins: int) -> int:
    """Bin 0 holds distance 0 (in-dist); bins 1..n-1 split (0, 1] evenly with
    right-closed edges."""
    if distance <= 0.0:
        return 0
    return min(n_bins - 1, 1 + int(distance * (n_bins - 1) - 1e-12))


def rollout_many(
    batch_policy,
    inits: list[WorldState],
    cfg: SimConfig = DEFAULT_CONFIG,
    horizon: int | None = None,
) -> list[tuple[float, int]]:
    """Run many episodes in lockstep; returns (final_reward, steps) per episode.

    batch_policy(indices, states) -> list of WorldAction for the active
    episodes. Results are identical to running episodes one at a time as long
    as the policy's per-episode behaviour doesn't depend on the batch.
    """
    H = cfg.horizon if horizon is None else horizon
    states = list(inits)
    finals = [(reward(s, cfg), 0) for s in states]
    active = list(range(len(states)))
    t = 0
    while active and t < H:
        actions = batch_policy(active, [states[i] for i in active])
        still = []
        for i, a in zip(active, actions):
            out = step(states[i], a, cfg)
            states[i] = out.next
            finals[i] = (out.reward, out.next.t)
            if not out.done:
                still.append(i)
        active = still
        t += 1
    return finals


def evaluate(
    ckpt: Checkpoint | None,
    spec: EvalSpec,
    cfg: SimConfig = DEFAULT_CONFIG,
    policy=None,
    meta: dict | None = None,
) -> EvalReport:
    """Evaluate a checkpoint (or an explicit state->action policy) on the
    fixed evaluation set and aggregate final rewards into distance bins."""
    inits = evaluation_states(spec, cfg)
    distances = [distance_to_manifold(anchor_point(s, cfg), spec, cfg) for s in inits]

    if policy is not None:
        def batch_policy(idx, states):
            return [policy(s) for s in states]
    elif ckpt.kind == "mlp":
        mlp = MlpPolicy(ckpt)

        def batch_policy(idx, states):
            return mlp.act_batch(states)
    elif ckpt.kind == "diffusion":
        execs = {
            i: RecedingHorizonExecutor(
                ckpt, np.random.default_rng(spec.eval_seed + 777_000 + i)
            )
            for i in range(len(inits))
        }

        def batch_policy(idx, states):
            for i, s in zip(idx, states):
                execs[i].observe(s)
            plan_ids = [i for i in idx if execs[i].needs_plan()]
            if plan_ids:
                pending = [execs[i].plan_inputs() for i in plan_ids]
                obs = np.asarray([p[0] for p in pending])
                seqs = ddpm_sample_batch(ckpt, obs, [execs[i].rng for i in plan_ids])
                for n, i in enumerate(plan_ids):
                    execs[i].accept_plan(seqs[n], pending[n][1])
            return [execs[i].pop_action() for i in idx]
    else:
        raise ValueError(f"unknown checkpoint kind {ckpt.kind!r}")

    finals = rollout_many(batch_policy, inits, cfg)

    n_bins = spec.bins
    episodes = []
    for s, d, (fr, steps) in zip(inits, distances, finals):
        b = _assign_bin(d, n_bins)
        pos = anchor_point(s, cfg)
        episodes.append(
            {
                "x": float(pos[0]),
                "y": float(pos[1]),
                "theta": float(s.entities[0].theta),
                "distance": d,
                "bin": b,
                "final_reward": fr,
                "steps": steps,
            }
        )
    bins = []
    width = 1.0 / (n_bins - 1)
    for b in range(n_bins):
        rows = [e for e in episodes if e["bin"] == b]
        bins.append(
            {
                "lo": 0.0 if b == 0 else (b - 1) * width,
                "hi": 0.0 if b == 0 else b * width,
                "mean_distance": float(np.mean([e["distance"] for e in rows])) if rows else None,
                "mean_reward": float(np.mean([e["final_reward"] for e in rows])) if rows else None,
                "count": len(rows),
            }
        )
    report_meta = {
        "eval_spec": spec.to_dict(),
        "states_hash": states_hash(inits),
        "sim_config": cfg.content_key(),
    }
    if ckpt is not None:
        report_meta["checkpoint_kind"] = ckpt.kind
        report_meta["space"] = ckpt.space.to_dict()
        report_meta["train_meta"] = ckpt.train_meta
    if meta:
        report_meta.update(meta)
    return EvalReport(bins=bins, episodes=episodes, meta=report_meta)
