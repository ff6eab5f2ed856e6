"""Mini version of the full experiment: the training matrix over all three
problem spaces plus the projection-radius ablation, with the summary CSV,
evaluation reports and heat maps landing в an output directory.

This is the same machinery the acceptance suite runs at 200 demos / 200
epochs / 3 seeds; here it is cut to 30 demos / 40 epochs / 1 seed so it
finishes over coffee. Expect the same ordering, with noisier numbers:
in-distribution all spaces comparable, far bins T2 >= T1 >= P.
"""
from pathlib import Path

from pushbench.harness import EvalSpec, collect_scripted
from pushbench.harness.matrix import ablate_lambda, run_matrix
from pushbench.learn import TrainConfig
from pushbench.sim import IN_DIST_MANIFOLD

out = Path("matrix_demo_out")
dataset = collect_scripted(30, IN_DIST_MANIFOLD, base_seed=0)
eval_spec = EvalSpec(n_in_dist=40, n_ood=120)
cfg = TrainConfig(learning_rate=1e-3, batch_size=1024, epochs=40)

print("running the 3-space matrix ...")
result = run_matrix(
    dataset,
    spaces=("p", "t1", "t2"),
    policy_kinds=("mlp",),
    seeds=(0,),
    train_cfg=cfg,
    eval_spec=eval_spec,
    out_dir=out,
    n_workers=2,
)
result.save(out / "matrix.json")
for space in ("p", "t1", "t2"):
    agg = result.aggregate(space, "mlp")
    cells = [
        "  --" if b["mean_reward"] is None else f"{b['mean_reward']:.2f}"
        for b in agg["bins"]
    ]
    print(f"  {space:>2}: {cells}  (bin 0 = in-dist)")

print("running the lambda ablation ...")
table = ablate_lambda(
    dataset,
    lambdas=(30.0, 150.0, 600.0),
    seeds=(0,),
    train_cfg=cfg,
    eval_spec=eval_spec,
    out_dir=out,
    n_workers=2,
)
for row in table["by_lambda"]:
    print(f"  lambda={row['lambda']:>5g}: in-dist {row['in_dist_mean']:.2f}, far bin {row['far_bin_mean']:.2f}")
print(f"outputs in {out}/ (reports, checkpoints, CSVs, lambda_ablation.svg)")
