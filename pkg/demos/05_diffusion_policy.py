"""The diffusion side: train the noise-conditioned action-sequence model on a
toy dataset and watch the receding-horizon executor replan every 8 steps."""
import numpy as np

from pushbench.geometry import Pose2
from pushbench.harness.policies import DiffusionPolicy
from pushbench.learn import DiffusionSpec, TrainConfig, ddpm_sample, ddpm_train, noise_schedule
from pushbench.spaces import SpaceSpec, WorldState

spec = DiffusionSpec(hidden_layers=2, hidden_dim=128)
print(f"horizons: obs {spec.obs_horizon}, predict {spec.pred_horizon}, execute {spec.exec_horizon}")
_, _, abar = noise_schedule(spec)
print(f"terminal signal fraction alpha_bar_N = {abar[-1]:.2e} (near-pure noise)")

# toy data: every sequence is the same constant action
rng = np.random.default_rng(0)
const = np.array([4.0, -2.0])
obs = rng.standard_normal((256, 6))
actions = np.tile(const, (256, spec.pred_horizon, 1))
valid = np.ones((256, spec.pred_horizon), dtype=bool)

print("training ...")
ck = ddpm_train(
    obs, actions, valid,
    SpaceSpec(kind="p", obs_horizon=2),
    spec,
    TrainConfig(learning_rate=1e-3, batch_size=64, epochs=300, seed=0),
)
print(f"  epsilon-loss: {ck.loss_curve[0]:.3f} (start) -> {ck.loss_curve[-1]:.4f} (end)")

seq = ddpm_sample(ck, obs[0], np.random.default_rng(1))
print(f"sampled sequence mean action: {np.round(seq.mean(axis=0), 4)} (target {const})")

# the executor plans pred_horizon actions but only runs exec_horizon of them
policy = DiffusionPolicy(ck, np.random.default_rng(2))
state = WorldState(ee=Pose2(0, 0, 0), entities=(Pose2(1, 1, 0),), target=np.zeros(2))
for t in range(24):
    policy(state)
print(f"24 steps -> {policy.exec.inference_count} inferences (one per {spec.exec_horizon} steps)")
