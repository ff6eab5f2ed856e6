"""Problem-space encoders: raw world frame (P), end-effector frame (T1), and
end-effector frame with locality projection (T2).

A policy never sees a WorldState directly; it sees the flat feature vector
produced here, and its output is decoded back into a world-frame action
through the same frame. Angles are featurised as (cos, sin) so regression
targets have no wraparound seam.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    Pose2,
    ProjectionRadius,
    express_in_frame,
    project_position,
    rotate_vector_into_frame,
    transform_point,
)

__all__ = [
    "WorldState",
    "WorldAction",
    "SpaceSpec",
    "FeaturizedSample",
    "TransformedDataset",
    "SpaceConfigError",
    "encode_state",
    "encode_action",
    "decode_action",
    "transform_dataset",
    "state_layout",
    "state_dim",
]

KINDS = ("p", "t1", "t2")


class SpaceConfigError(ValueError):
    """Raised for inconsistent SpaceSpec / encoder inputs."""


@dataclass(frozen=True)
class WorldState:
    """Simulator ground truth: EE pose, entity poses, fixed target point, step index."""

    ee: Pose2
    entities: tuple[Pose2, ...]
    target: np.ndarray
    t: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "entities", tuple(self.entities))
        object.__setattr__(self, "target", np.asarray(self.target, dtype=float).reshape(2))


@dataclass(frozen=True)
class WorldAction:
    """EE position offset in the world frame."""

    delta: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", np.asarray(self.delta, dtype=float).reshape(2))


@dataclass(frozen=True)
class SpaceSpec:
    """Which problem space to encode into, and its knobs."""

    kind: str = "p"
    lam: ProjectionRadius | None = None
    obs_horizon: int = 1
    drop_trivial_ee: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SpaceConfigError(f"unknown space kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "t2" and self.lam is None:
            raise SpaceConfigError("kind 't2' requires a projection radius")
        if self.obs_horizon < 1:
            raise SpaceConfigError("obs_horizon must be >= 1")
        if self.drop_trivial_ee and self.obs_horizon != 1:
            raise SpaceConfigError("drop_trivial_ee is only valid for obs_horizon == 1")
        if isinstance(self.lam, (int, float)):
            object.__setattr__(self, "lam", ProjectionRadius(self.lam))

    @property
    def include_ee(self) -> bool:
        # The EE entry is a zero vector in the EE frame for single-step windows
        # and may be dropped there; in the raw space it is real information.
        return not (self.drop_trivial_ee and self.kind in ("t1", "t2"))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lambda": None if self.lam is None else self.lam.lam,
            "obs_horizon": self.obs_horizon,
            "drop_trivial_ee": self.drop_trivial_ee,
        }

    @staticmethod
    def from_dict(d: dict) -> "SpaceSpec":
        lam = d.get("lambda")
        return SpaceSpec(
            kind=d["kind"],
            lam=None if lam is None else ProjectionRadius(lam),
            obs_horizon=int(d["obs_horizon"]),
            drop_trivial_ee=bool(d["drop_trivial_ee"]),
        )


@dataclass(frozen=True)
class FeaturizedSample:
    """One encoded (state, action) pair plus the frame used to encode it."""

    state_vec: np.ndarray
    action_vec: np.ndarray
    space: SpaceSpec
    frame_e: Pose2


def state_dim(spec: SpaceSpec, n_entities: int) -> int:
    per_step = (2 if spec.include_ee else 0) + 4 * n_entities + 2
    return per_step * spec.obs_horizon


def state_layout(spec: SpaceSpec, n_entities: int) -> list[str]:
    """Human-readable label for every index of the encoded state vector."""
    frame = "W" if spec.kind == "p" else "E"
    labels: list[str] = []
    for step in range(spec.obs_horizon):
        tag = f"step{step - spec.obs_horizon + 1}"  # step0 is the newest
        if spec.include_ee:
            labels += [f"{tag}.ee.x[{frame}]", f"{tag}.ee.y[{frame}]"]
        for i in range(n_entities):
            labels += [
                f"{tag}.entity{i}.x[{frame}]",
                f"{tag}.entity{i}.y[{frame}]",
                f"{tag}.entity{i}.cos_theta",
                f"{tag}.entity{i}.sin_theta",
            ]
        labels += [f"{tag}.target.x[{frame}]", f"{tag}.target.y[{frame}]"]
    return labels


def _encode_step(state: WorldState, spec: SpaceSpec, frame: Pose2) -> list[float]:
    out: list[float] = []
    if spec.kind == "p":
        if spec.include_ee:
            out += [state.ee.x, state.ee.y]
        for ent in state.entities:
            out += [ent.x, ent.y, np.cos(ent.theta), np.sin(ent.theta)]
        out += [state.target[0], state.target[1]]
        return out

    if spec.include_ee:
        ee_e = express_in_frame(frame, state.ee)
        out += [ee_e.x, ee_e.y]
    for ent in state.entities:
        ent_e = express_in_frame(frame, ent)
        pos = np.array([ent_e.x, ent_e.y])
        if spec.kind == "t2":
            pos = project_position(pos, spec.lam)
        out += [pos[0], pos[1], np.cos(ent_e.theta), np.sin(ent_e.theta)]
    tgt = transform_point(frame, state.target)
    if spec.kind == "t2":
        tgt = project_position(tgt, spec.lam)
    out += [tgt[0], tgt[1]]
    return out


def frame_of_window(window: Sequence[WorldState], spec: SpaceSpec) -> Pose2:
    """Frame E for a window: the newest step's EE pose (identity for kind P)."""
    if spec.kind == "p":
        return Pose2.identity()
    return window[-1].ee


def encode_state(window: Sequence[WorldState], spec: SpaceSpec) -> tuple[np.ndarray, Pose2]:
    """Encode an observation window (oldest -> newest) into a flat state vector.

    Returns the vector together with the frame E it was built in, which the
    caller needs to decode policy actions back into the world frame.
    """
    if len(window) != spec.obs_horizon:
        raise SpaceConfigError(
            f"window length {len(window)} does not match obs_horizon {spec.obs_horizon}"
        )
    frame = frame_of_window(window, spec)
    feats: list[float] = []
    for s in window:
        feats += _encode_step(s, spec, frame)
    return np.asarray(feats, dtype=float), frame


def encode_state_batch(states: Sequence[WorldState], spec: SpaceSpec) -> tuple[np.ndarray, list[Pose2]]:
    """Vectorised encode_state for single-step windows (obs_horizon == 1).

    Exactly the same values as calling encode_state per state; used by the
    evaluator where per-episode Python overhead dominates.
    """
    if spec.obs_horizon != 1:
        vecs, frames = [], []
        for s in states:
            v, f = encode_state([s] * spec.obs_horizon, spec)
            vecs.append(v)
            frames.append(f)
        return np.asarray(vecs), frames

    n = len(states)
    n_ent = len(states[0].entities)
    ee = np.array([[s.ee.x, s.ee.y] for s in states])
    tgt = np.array([s.target for s in states])
    cols: list[np.ndarray] = []
    if spec.kind == "p":
        frames = [Pose2.identity()] * n
        if spec.include_ee:
            cols.append(ee)
        for j in range(n_ent):
            ent = np.array([[s.entities[j].x, s.entities[j].y, s.entities[j].theta] for s in states])
            cols.append(ent[:, :2])
            cols.append(np.column_stack([np.cos(ent[:, 2]), np.sin(ent[:, 2])]))
        cols.append(tgt)
        return np.concatenate(cols, axis=1), frames

    theta = np.array([s.ee.theta for s in states])
    c, s_ = np.cos(theta), np.sin(theta)
    frames = [state.ee for state in states]

    def into_frame(points: np.ndarray) -> np.ndarray:
        d = points - ee
        return np.column_stack([c * d[:, 0] + s_ * d[:, 1], -s_ * d[:, 0] + c * d[:, 1]])

    def maybe_project(p: np.ndarray) -> np.ndarray:
        if spec.kind != "t2":
            return p
        norm = np.sqrt(np.sum(p * p, axis=1))
        scale = np.where(
            norm < spec.lam.lam,
            1.0,
            np.divide(spec.lam.lam, norm, out=np.ones_like(norm), where=norm > 0),
        )
        return p * scale[:, None]

    if spec.include_ee:
        cols.append(np.zeros((n, 2)))
    for j in range(n_ent):
        ent = np.array([[s.entities[j].x, s.entities[j].y, s.entities[j].theta] for s in states])
        pos = maybe_project(into_frame(ent[:, :2]))
        rel_theta = ent[:, 2] - theta
        cols.append(pos)
        cols.append(np.column_stack([np.cos(rel_theta), np.sin(rel_theta)]))
    cols.append(maybe_project(into_frame(tgt)))
    return np.concatenate(cols, axis=1), frames


def encode_action(a: WorldAction, frame_e: Pose2) -> np.ndarray:
    """Express an EE offset in frame E. Offsets are free vectors: rotation only."""
    return rotate_vector_into_frame(frame_e, a.delta)


def decode_action(v: np.ndarray, frame_e: Pose2) -> WorldAction:
    """Exact inverse of :func:`encode_action`."""
    if frame_e.theta == 0.0:
        return WorldAction(v)
    return WorldAction(frame_e.rotate_vector(v))


@dataclass
class TransformedDataset:
    """Dense arrays of encoded samples ready for training.

    `actions` has shape (n, horizon, 2); `valid` masks out the right-padding
    that extends action sequences past the end of an episode. For horizon 1
    (one-step policies) every entry is valid.
    """

    states: np.ndarray
    actions: np.ndarray
    valid: np.ndarray
    frames: np.ndarray  # (n, 3): frame E as (x, y, theta) per sample
    episode_ids: np.ndarray
    step_index: np.ndarray
    space: SpaceSpec
    layout: list[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def action_horizon(self) -> int:
        return self.actions.shape[1]

    def sample(self, i: int) -> FeaturizedSample:
        fx, fy, ft = self.frames[i]
        return FeaturizedSample(
            state_vec=self.states[i],
            action_vec=self.actions[i],
            space=self.space,
            frame_e=Pose2(fx, fy, ft),
        )

    def save(self, path) -> None:
        """Write arrays plus the index->semantics layout table as a sidecar."""
        import json
        from pathlib import Path

        path = Path(path)
        np.savez(
            path,
            states=self.states,
            actions=self.actions,
            valid=self.valid,
            frames=self.frames,
            episode_ids=self.episode_ids,
            step_index=self.step_index,
        )
        sidecar = path.with_suffix(".layout.json")
        sidecar.write_text(
            json.dumps({"space": self.space.to_dict(), "layout": self.layout}, indent=2)
            + "\n"
        )


def transform_dataset(episodes, spec: SpaceSpec, action_horizon: int = 1) -> TransformedDataset:
    """Turn demonstration episodes into encoded training samples.

    One sample per step: the observation window of length `obs_horizon` ending
    at that step (left-padded by repeating the episode's first state) and the
    action sequence of length `action_horizon` starting there (right-padded by
    repeating the final action, with the padding masked out of `valid`).
    """
    states_out: list[np.ndarray] = []
    actions_out: list[np.ndarray] = []
    valid_out: list[np.ndarray] = []
    frames_out: list[list[float]] = []
    ep_ids: list[int] = []
    t_idx: list[int] = []

    n_entities = None
    for ep_num, ep in enumerate(episodes):
        steps = ep.steps if hasattr(ep, "steps") else ep
        if len(steps) < 1:
            raise SpaceConfigError(f"episode {ep_num} has no steps")
        ep_states = [s[0] for s in steps]
        ep_actions = [s[1] for s in steps]
        if n_entities is None:
            n_entities = len(ep_states[0].entities)
        H = len(steps)
        for t in range(H):
            window = [ep_states[max(0, k)] for k in range(t - spec.obs_horizon + 1, t + 1)]
            svec, frame = encode_state(window, spec)
            seq = np.empty((action_horizon, 2))
            mask = np.empty(action_horizon, dtype=bool)
            for j in range(action_horizon):
                k = t + j
                real = k < H
                seq[j] = encode_action(ep_actions[min(k, H - 1)], frame)
                mask[j] = real
            states_out.append(svec)
            actions_out.append(seq)
            valid_out.append(mask)
            frames_out.append([frame.x, frame.y, frame.theta])
            ep_ids.append(ep_num)
            t_idx.append(t)

    return TransformedDataset(
        states=np.asarray(states_out),
        actions=np.asarray(actions_out),
        valid=np.asarray(valid_out),
        frames=np.asarray(frames_out),
        episode_ids=np.asarray(ep_ids, dtype=int),
        step_index=np.asarray(t_idx, dtype=int),
        space=spec,
        layout=state_layout(spec, n_entities if n_entities is not None else 1),
    )
