"""Minimal DDPM over flattened action sequences, conditioned on observation
features and a sinusoidal timestep embedding, with an MLP denoiser.

Training regresses the injected noise at a random diffusion step; sampling is
the standard ancestral reverse chain. The 100-step schedule ramps beta from
1e-3 to 0.2 — the usual 1000-step 1e-4..2e-2 profile compressed tenfold — so
the terminal signal fraction alpha_bar_N stays below 1%.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spaces import SpaceSpec
from .checkpoint import Checkpoint, TrainConfig
from .fused import FusedMlpTrainer
from .nets import MlpSpec, init_mlp, mlp_forward
from .optim import AdamState, adam_step
from .standardize import Standardiser

__all__ = [
    "DiffusionSpec",
    "noise_schedule",
    "timestep_embedding",
    "ddpm_train",
    "ddpm_sample",
    "ddpm_sample_batch",
]


@dataclass(frozen=True)
class DiffusionSpec:
    obs_horizon: int = 2
    pred_horizon: int = 16
    exec_horizon: int = 8
    denoise_steps: int = 100
    beta_start: float = 1e-3
    beta_end: float = 0.2
    emb_dim: int = 32
    hidden_layers: int = 5
    hidden_dim: int = 512
    dropout_p: float = 0.0
    l2_weight: float = 1e-5

    def __post_init__(self) -> None:
        if not 1 <= self.exec_horizon <= self.pred_horizon:
            raise ValueError("need 1 <= exec_horizon <= pred_horizon")
        if self.denoise_steps < 1:
            raise ValueError("denoise_steps must be >= 1")
        if not (0.0 < self.beta_start < self.beta_end < 1.0):
            raise ValueError("need 0 < beta_start < beta_end < 1")
        if self.emb_dim % 2:
            raise ValueError("emb_dim must be even")

    def to_dict(self) -> dict:
        return {
            "obs_horizon": self.obs_horizon,
            "pred_horizon": self.pred_horizon,
            "exec_horizon": self.exec_horizon,
            "denoise_steps": self.denoise_steps,
            "beta_start": self.beta_start,
            "beta_end": self.beta_end,
            "emb_dim": self.emb_dim,
            "hidden_layers": self.hidden_layers,
            "hidden_dim": self.hidden_dim,
            "dropout_p": self.dropout_p,
            "l2_weight": self.l2_weight,
        }

    @staticmethod
    def from_dict(d: dict) -> "DiffusionSpec":
        return DiffusionSpec(**d)


def noise_schedule(spec: DiffusionSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(betas, alphas, alpha_bar), each of length denoise_steps."""
    betas = np.linspace(spec.beta_start, spec.beta_end, spec.denoise_steps)
    alphas = 1.0 - betas
    return betas, alphas, np.cumprod(alphas)


def timestep_embedding(k: np.ndarray, dim: int, n_steps: int) -> np.ndarray:
    """Sinusoidal embedding of diffusion step indices (1-based)."""
    k = np.atleast_1d(np.asarray(k, dtype=float))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    ang = k[:, None] * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


def ddpm_train(
    obs: np.ndarray,
    actions: np.ndarray,
    valid: np.ndarray,
    space: SpaceSpec,
    spec: DiffusionSpec,
    cfg: TrainConfig,
    extra_meta: dict | None = None,
    dtype=np.float32,
) -> Checkpoint:
    """Train the noise predictor on (obs window features, action sequence) pairs.

    actions: (n, pred_horizon, act_dim); valid masks right-padding out of the
    loss. Standardisers are fitted on the unpadded data only.
    """
    obs = np.asarray(obs, dtype=float)
    actions = np.asarray(actions, dtype=float)
    valid = np.asarray(valid, dtype=bool)
    n, horizon, act_dim = actions.shape
    if horizon != spec.pred_horizon:
        raise ValueError(f"action horizon {horizon} != pred_horizon {spec.pred_horizon}")
    if n == 0:
        raise ValueError("empty training set")

    x_std = Standardiser.fit(obs)
    y_std = Standardiser.fit(actions[valid])
    O = np.ascontiguousarray(x_std.transform(obs), dtype=dtype)
    A = (actions - y_std.mean) / y_std.std  # broadcast over (n, T, d)
    A_flat = np.ascontiguousarray(A.reshape(n, horizon * act_dim), dtype=dtype)
    mask_flat = np.ascontiguousarray(np.repeat(valid, act_dim, axis=1), dtype=dtype)

    betas, alphas, abar = noise_schedule(spec)
    seq_dim = horizon * act_dim
    net_spec = MlpSpec(
        input_dim=seq_dim + O.shape[1] + spec.emb_dim,
        output_dim=seq_dim,
        hidden_layers=spec.hidden_layers,
        hidden_dim=spec.hidden_dim,
        dropout_p=spec.dropout_p,
        l2_weight=spec.l2_weight,
    )
    rng = np.random.default_rng(cfg.seed)
    params = init_mlp(net_spec, rng, dtype=dtype)
    opt = AdamState.for_params(params)
    trainer = FusedMlpTrainer(net_spec, params, dtype=dtype)

    curve = np.zeros(cfg.epochs)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            b = len(idx)
            k = rng.integers(1, spec.denoise_steps + 1, size=b)  # 1..N
            eps = rng.standard_normal((b, seq_dim)).astype(dtype)
            ab = abar[k - 1][:, None]
            noisy = np.sqrt(ab) * A_flat[idx] + np.sqrt(1.0 - ab) * eps
            x_in = np.ascontiguousarray(
                np.concatenate(
                    [noisy, O[idx], timestep_embedding(k, spec.emb_dim, spec.denoise_steps)],
                    axis=1,
                ),
                dtype=dtype,
            )
            loss = trainer.loss_and_grad(x_in, eps, rng, element_mask=mask_flat[idx])
            params, opt = adam_step(opt, params, trainer.grads, cfg.learning_rate)
            losses.append(loss)
        curve[epoch] = float(np.mean(losses))

    meta = {
        "train_config": cfg.to_dict(),
        "n_samples": n,
        "act_dim": act_dim,
        # standardised per-column action range, for x0 clamping at sampling
        "clip_lo": np.min(A_flat, axis=0).astype(float).tolist(),
        "clip_hi": np.max(A_flat, axis=0).astype(float).tolist(),
    }
    if extra_meta:
        meta.update(extra_meta)
    return Checkpoint(
        kind="diffusion",
        params=params,
        space=space,
        mlp_spec=net_spec,
        diffusion_spec=spec,
        x_standardiser=x_std,
        y_standardiser=y_std,
        train_meta=meta,
        loss_curve=curve,
    )


def _reverse_chain(
    ckpt: Checkpoint, obs_std: np.ndarray, noise_draws
) -> np.ndarray:
    """Shared ancestral sampler. obs_std: (B, obs_dim) already standardised;
    noise_draws(j) must return the j-th (B, seq_dim) standard-normal draw
    (j=0 is the initial state, then one per step k=N..2).

    Each step predicts the clean sequence, clamps it to the training action
    range, and samples the posterior around the clamped value — the usual
    guard against the chain drifting off the data manifold.
    """
    spec: DiffusionSpec = ckpt.diffusion_spec
    betas, alphas, abar = noise_schedule(spec)
    lo = np.asarray(ckpt.train_meta["clip_lo"])
    hi = np.asarray(ckpt.train_meta["clip_hi"])
    B = obs_std.shape[0]
    x = noise_draws(0)
    draw = 1
    for k in range(spec.denoise_steps, 0, -1):
        emb = timestep_embedding(np.full(B, k), spec.emb_dim, spec.denoise_steps)
        eps_hat = mlp_forward(
            ckpt.params, np.concatenate([x, obs_std, emb], axis=1), train_mode=False
        )
        a_k = alphas[k - 1]
        ab_k = abar[k - 1]
        ab_prev = abar[k - 2] if k > 1 else 1.0
        x0_hat = (x - np.sqrt(1.0 - ab_k) * eps_hat) / np.sqrt(ab_k)
        np.clip(x0_hat, lo, hi, out=x0_hat)
        coef_x0 = np.sqrt(ab_prev) * betas[k - 1] / (1.0 - ab_k)
        coef_xk = np.sqrt(a_k) * (1.0 - ab_prev) / (1.0 - ab_k)
        x = coef_x0 * x0_hat + coef_xk * x
        if k > 1:
            sigma = np.sqrt((1.0 - ab_prev) / (1.0 - ab_k) * betas[k - 1])
            x = x + sigma * noise_draws(draw)
            draw += 1
    return x


def ddpm_sample(ckpt: Checkpoint, obs_vec: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Sample one action sequence (pred_horizon, act_dim), de-standardised."""
    seqs = ddpm_sample_batch(ckpt, np.asarray(obs_vec, dtype=float)[None, :], [rng])
    return seqs[0]


def ddpm_sample_batch(
    ckpt: Checkpoint, obs_batch: np.ndarray, rngs: list[np.random.Generator]
) -> np.ndarray:
    """Sample one sequence per row of obs_batch.

    Each row's noise comes from its own generator, in a fixed order, so a
    row's sample depends only on its rng — not on what else shares the batch.
    """
    spec: DiffusionSpec = ckpt.diffusion_spec
    act_dim = ckpt.train_meta.get("act_dim", 2)
    seq_dim = spec.pred_horizon * act_dim
    obs_std = ckpt.x_standardiser.transform(obs_batch)
    B = obs_std.shape[0]
    if B != len(rngs):
        raise ValueError("need one rng per row")

    def noise_draws(_j: int) -> np.ndarray:
        return np.stack([rng.standard_normal(seq_dim) for rng in rngs])

    x = _reverse_chain(ckpt, obs_std, noise_draws)
    seqs = x.reshape(B, spec.pred_horizon, act_dim)
    return seqs * ckpt.y_standardiser.std + ckpt.y_standardiser.mean
