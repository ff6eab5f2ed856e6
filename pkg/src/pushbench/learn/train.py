"""Mini-batch BC training for the one-step MLP policy."""
from __future__ import annotations

import numpy as np

from ..spaces import SpaceSpec
from .checkpoint import Checkpoint, TrainConfig
from .fused import FusedMlpTrainer
from .nets import MlpSpec, init_mlp
from .optim import AdamState, adam_step
from .standardize import Standardiser

__all__ = ["train_mlp"]


def train_mlp(
    states: np.ndarray,
    actions: np.ndarray,
    space: SpaceSpec,
    cfg: TrainConfig,
    hidden_layers: int = 5,
    hidden_dim: int = 512,
    dropout_p: float = 0.05,
    l2_weight: float = 1e-5,
    extra_meta: dict | None = None,
    dtype=np.float32,
) -> Checkpoint:
    """Fit action = f(state) by standardised MSE regression.

    One rng stream (from cfg.seed) drives init, batch order and dropout, so a
    rerun with the same inputs reproduces the checkpoint bit for bit. float32
    by default: checkpoints store float32 anyway and GEMMs run twice as fast.
    """
    states = np.asarray(states, dtype=float)
    actions = np.asarray(actions, dtype=float)
    if actions.ndim == 3:  # (n, 1, d) single-step sequences
        actions = actions[:, 0, :]
    n = len(states)
    if n == 0:
        raise ValueError("empty training set")

    x_std = Standardiser.fit(states)
    y_std = Standardiser.fit(actions)
    X = np.ascontiguousarray(x_std.transform(states), dtype=dtype)
    Y = np.ascontiguousarray(y_std.transform(actions), dtype=dtype)

    spec = MlpSpec(
        input_dim=X.shape[1],
        output_dim=Y.shape[1],
        hidden_layers=hidden_layers,
        hidden_dim=hidden_dim,
        dropout_p=dropout_p,
        l2_weight=l2_weight,
    )
    rng = np.random.default_rng(cfg.seed)
    params = init_mlp(spec, rng, dtype=dtype)
    opt = AdamState.for_params(params)
    trainer = FusedMlpTrainer(spec, params, dtype=dtype)

    curve = np.zeros(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss = trainer.loss_and_grad(X[idx], Y[idx], rng)
            params, opt = adam_step(opt, params, trainer.grads, cfg.learning_rate)
            losses.append(loss)
        curve[epoch] = float(np.mean(losses))

    meta = {"train_config": cfg.to_dict(), "n_samples": n}
    if extra_meta:
        meta.update(extra_meta)
    return Checkpoint(
        kind="mlp",
        params=params,
        space=space,
        mlp_spec=spec,
        x_standardiser=x_std,
        y_standardiser=y_std,
        train_meta=meta,
        loss_curve=curve,
    )
