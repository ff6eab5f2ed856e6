"""Plain-numpy MLP: ReLU hidden layers, inverted dropout, hand-written
reverse-mode gradients for a (masked) per-element MSE loss with L2 weight
decay.

All arithmetic follows the dtype of the parameters — float64 for the gradient
oracle tests, float32 for the training pipelines where GEMM throughput
matters. One rng stream drives all stochastic choices so training runs are
bit-reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MlpSpec", "init_mlp", "mlp_forward", "mlp_loss_and_grad"]


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    output_dim: int
    hidden_layers: int = 5
    hidden_dim: int = 512
    dropout_p: float = 0.05
    l2_weight: float = 1e-5

    def __post_init__(self) -> None:
        if self.input_dim < 1 or self.output_dim < 1 or self.hidden_dim < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")

    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.input_dim] + [self.hidden_dim] * self.hidden_layers + [self.output_dim]
        return list(zip(dims[:-1], dims[1:]))

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "output_dim": self.output_dim,
            "hidden_layers": self.hidden_layers,
            "hidden_dim": self.hidden_dim,
            "dropout_p": self.dropout_p,
            "l2_weight": self.l2_weight,
        }

    @staticmethod
    def from_dict(d: dict) -> "MlpSpec":
        return MlpSpec(**d)


def init_mlp(spec: MlpSpec, rng: np.random.Generator, dtype=np.float64) -> list[np.ndarray]:
    """Fan-in-scaled uniform init. Params are a flat list [W0, b0, W1, b1, ...]."""
    params: list[np.ndarray] = []
    for fan_in, fan_out in spec.layer_dims():
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        params.append(rng.uniform(-bound, bound, size=fan_out).astype(dtype))
    return params


def _forward_cached(
    params: list[np.ndarray],
    x: np.ndarray,
    dropout_p: float,
    train_mode: bool,
    rng: np.random.Generator | None,
    dropout_masks: list[np.ndarray] | None = None,
):
    """Forward pass keeping layer inputs for the backward pass.

    Dropout keeps a unit with probability 1-p and scales survivors by
    1/(1-p); masks are boolean keep-masks (`dropout_masks` overrides sampling
    for gradient checks that must re-evaluate the same stochastic network).
    """
    n_layers = len(params) // 2
    use_dropout = train_mode and dropout_p > 0.0
    inv_keep = 1.0 / (1.0 - dropout_p) if use_dropout else 1.0
    acts = [x]  # inputs to each affine layer
    masks: list[np.ndarray | None] = []
    h = x
    for i in range(n_layers):
        W, b = params[2 * i], params[2 * i + 1]
        z = h @ W
        z += b
        if i < n_layers - 1:
            np.maximum(z, 0.0, out=z)
            if use_dropout:
                if dropout_masks is not None:
                    m = dropout_masks[i]
                else:
                    m = rng.random(z.shape, dtype=z.dtype) >= dropout_p
                z *= m
                z *= z.dtype.type(inv_keep)
                masks.append(m)
            else:
                masks.append(None)
            acts.append(z)
        h = z
    return h, acts, masks, inv_keep


def mlp_forward(
    params_or_checkpoint,
    x: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    dropout_p: float | None = None,
) -> np.ndarray:
    """Raw network output for a batch (or single vector) of inputs.

    Accepts either a raw parameter list or a Checkpoint. No standardisation is
    applied here; policy wrappers own that. Deterministic when
    train_mode=False (dropout off).
    """
    params = getattr(params_or_checkpoint, "params", params_or_checkpoint)
    if dropout_p is None:
        spec = getattr(params_or_checkpoint, "mlp_spec", None)
        dropout_p = spec.dropout_p if spec is not None else 0.0
    x = np.asarray(x)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != params[0].shape[0]:
        raise ValueError(f"input dim {x.shape[1]} != expected {params[0].shape[0]}")
    y, _, _, _ = _forward_cached(params, x, dropout_p, train_mode, rng)
    return y[0] if single else y


def mlp_loss_and_grad(
    params: list[np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    l2_weight: float = 0.0,
    dropout_p: float = 0.0,
    rng: np.random.Generator | None = None,
    element_mask: np.ndarray | None = None,
    dropout_masks: list[np.ndarray] | None = None,
) -> tuple[float, list[np.ndarray]]:
    """Per-element MSE (optionally masked) + l2.||W||^2, with exact gradients.

    The element mask zeroes padded targets out of both the loss and its
    gradient; the normaliser is the count of unmasked elements. L2 applies to
    weight matrices only, not biases.
    """
    if len(x) == 0:
        raise ValueError("empty batch")
    pred, acts, masks, inv_keep = _forward_cached(
        params, x, dropout_p, dropout_p > 0.0, rng, dropout_masks
    )
    err = pred - y
    if element_mask is not None:
        err *= element_mask
        denom = float(np.sum(element_mask))
    else:
        denom = float(err.size)
    loss = float(np.sum(err * err)) / denom
    d = err
    d *= d.dtype.type(2.0 / denom)

    n_layers = len(params) // 2
    grads: list[np.ndarray] = [None] * len(params)  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        W = params[2 * i]
        grads[2 * i] = acts[i].T @ d
        grads[2 * i + 1] = d.sum(axis=0)
        if i > 0:
            d = d @ W.T
            # post-activation > 0 covers both the ReLU slope and dropped units
            d *= acts[i] > 0.0
            if masks[i - 1] is not None:
                d *= d.dtype.type(inv_keep)

    if l2_weight > 0.0:
        for i in range(n_layers):
            W = params[2 * i]
            loss += l2_weight * float(np.sum(W * W))
            grads[2 * i] += (2.0 * l2_weight) * W
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss}")
    return loss, grads
