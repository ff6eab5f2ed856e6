"""Policy wrappers: turn a Checkpoint into a WorldState -> WorldAction callable.

Both wrappers also expose a batched interface (`act_batch`) used by the
lockstep evaluator; batching only affects throughput, never which action an
episode receives.
"""
from __future__ import annotations

from collections import deque

import numpy as np

from ..learn import Checkpoint, ddpm_sample_batch, mlp_forward
from ..spaces import (
    WorldAction,
    WorldState,
    decode_action,
    encode_state,
    encode_state_batch,
)

__all__ = ["MlpPolicy", "DiffusionPolicy", "RecedingHorizonExecutor", "make_policy"]


class MlpPolicy:
    """One observation in, one action out."""

    def __init__(self, ckpt: Checkpoint):
        if ckpt.kind != "mlp":
            raise ValueError(f"expected an mlp checkpoint, got {ckpt.kind!r}")
        self.ckpt = ckpt
        self.space = ckpt.space

    def __call__(self, state: WorldState) -> WorldAction:
        return self.act_batch([state])[0]

    def act_batch(self, states: list[WorldState]) -> list[WorldAction]:
        vecs, frames = encode_state_batch(states, self.space)
        X = self.ckpt.x_standardiser.transform(vecs)
        out = mlp_forward(self.ckpt, X, train_mode=False)
        out = self.ckpt.y_standardiser.inverse(out)
        return [decode_action(out[i], frames[i]) for i in range(len(states))]


class RecedingHorizonExecutor:
    """Keeps the last obs_horizon states; re-plans a pred_horizon action
    sequence whenever the executed buffer runs out, executing exec_horizon
    actions per plan."""

    def __init__(self, ckpt: Checkpoint, rng: np.random.Generator):
        self.ckpt = ckpt
        self.spec = ckpt.diffusion_spec
        self.space = ckpt.space
        self.rng = rng
        self.window: deque[WorldState] = deque(maxlen=self.spec.obs_horizon)
        self.queue: deque[WorldAction] = deque()
        self.inference_count = 0

    def observe(self, state: WorldState) -> None:
        if not self.window:
            for _ in range(self.spec.obs_horizon):  # left-pad with the first state
                self.window.append(state)
        else:
            self.window.append(state)

    def needs_plan(self) -> bool:
        return not self.queue

    def plan_inputs(self) -> tuple[np.ndarray, object]:
        vec, frame = encode_state(list(self.window), self.space)
        return vec, frame

    def accept_plan(self, seq: np.ndarray, frame) -> None:
        self.inference_count += 1
        for j in range(self.spec.exec_horizon):
            self.queue.append(decode_action(seq[j], frame))

    def pop_action(self) -> WorldAction:
        return self.queue.popleft()


class DiffusionPolicy:
    """Sequential convenience wrapper around RecedingHorizonExecutor."""

    def __init__(self, ckpt: Checkpoint, rng: np.random.Generator):
        if ckpt.kind != "diffusion":
            raise ValueError(f"expected a diffusion checkpoint, got {ckpt.kind!r}")
        self.ckpt = ckpt
        self.exec = RecedingHorizonExecutor(ckpt, rng)

    def __call__(self, state: WorldState) -> WorldAction:
        self.exec.observe(state)
        if self.exec.needs_plan():
            vec, frame = self.exec.plan_inputs()
            seq = ddpm_sample_batch(self.ckpt, vec[None, :], [self.exec.rng])[0]
            self.exec.accept_plan(seq, frame)
        return self.exec.pop_action()


def make_policy(ckpt: Checkpoint, rng: np.random.Generator | None = None):
    if ckpt.kind == "mlp":
        return MlpPolicy(ckpt)
    if rng is None:
        raise ValueError("diffusion policies need an rng")
    return DiffusionPolicy(ckpt, rng)
