"""Small end-to-end run: collect demonstrations, train one MLP per problem
space, evaluate on the shared in-dist + OOD initial states, print the binned
rewards, and export a heat map for the T2 policy.

Scaled down (40 demos, 60 epochs, 90 eval episodes) to finish in a couple of
minutes; bump the numbers for sharper curves.
"""
import numpy as np

from pushbench.harness import EvalSpec, collect_scripted, export_heatmap
from pushbench.harness.matrix import CellSpec, train_cell
from pushbench.learn import TrainConfig
from pushbench.sim import IN_DIST_MANIFOLD

print("collecting demonstrations...")
dataset = collect_scripted(40, IN_DIST_MANIFOLD, base_seed=0)
print(f"  {len(dataset)} episodes, {dataset.n_steps()} steps")

eval_spec = EvalSpec(n_in_dist=30, n_ood=60)
train_cfg = TrainConfig(learning_rate=1e-3, batch_size=1024, epochs=60)

reports = {}
for kind in ("p", "t1", "t2"):
    cell = CellSpec(kind, "mlp", seed=0, lam=150.0 if kind == "t2" else None)
    print(f"training {cell.name} ...")
    ckpt, report = train_cell(dataset, cell, train_cfg=train_cfg, eval_spec=eval_spec)
    reports[kind] = report
    means = [
        "   --" if b["mean_reward"] is None else f"{b['mean_reward']:.2f}" for b in report.bins
    ]
    print(f"  final loss {ckpt.loss_curve[-1]:.4f}; bin means {means}")

print("\nbin 0 is in-distribution; higher bins are farther OOD starts.")
out = export_heatmap(reports["t2"], "demo_heatmap")
print(f"heat map written: {out['image']} (+ {out['csv']})")
