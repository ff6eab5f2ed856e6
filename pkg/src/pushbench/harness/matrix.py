"""Training/evaluation matrix over problem spaces, policy classes and seeds,
plus the lambda ablation.

Each cell is a pure function of (dataset, cell config): transform the
demonstrations into the cell's problem space, fit the standardisers, train,
evaluate on the shared fixed evaluation set. Cells run in separate processes
(deterministic per cell, reduced in cell order) or sequentially with
n_workers=1.
"""
from __future__ import annotations

import csv
import json
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import ProjectionRadius
from ..learn import Checkpoint, DiffusionSpec, TrainConfig, ddpm_train, train_mlp
from ..learn.checkpoint import DIFFUSION_TRAIN_DEFAULTS
from ..sim import DEFAULT_CONFIG, SimConfig
from ..spaces import SpaceSpec, transform_dataset
from .dataset import Dataset
from .evaluation import EvalReport, EvalSpec, evaluate

__all__ = ["CellSpec", "MatrixResult", "run_matrix", "ablate_lambda", "train_cell"]

DEFAULT_LAMBDA = 150.0
MLP_TRAIN_DEFAULTS = TrainConfig(learning_rate=1e-3, batch_size=1024, epochs=1200)


def space_for(kind: str, policy: str, lam: float | None = None) -> SpaceSpec:
    """The SpaceSpec a matrix cell uses: single-step windows with the trivial
    EE entry dropped for MLPs, two-step windows keeping it for diffusion."""
    lam_val = None if kind == "p" else lam
    if kind == "t2" and lam_val is None:
        lam_val = DEFAULT_LAMBDA
    if policy == "mlp":
        return SpaceSpec(
            kind=kind,
            lam=None if kind != "t2" else ProjectionRadius(lam_val),
            obs_horizon=1,
            drop_trivial_ee=kind in ("t1", "t2"),
        )
    return SpaceSpec(
        kind=kind,
        lam=None if kind != "t2" else ProjectionRadius(lam_val),
        obs_horizon=DiffusionSpec().obs_horizon,
        drop_trivial_ee=False,
    )


@dataclass(frozen=True)
class CellSpec:
    space_kind: str  # p | t1 | t2
    policy_kind: str  # mlp | diffusion
    seed: int
    lam: float | None = None  # t2 only

    @property
    def name(self) -> str:
        lam = "" if self.lam is None else f"_lam{self.lam:g}"
        return f"{self.space_kind}{lam}_{self.policy_kind}_seed{self.seed}"


def train_cell(
    dataset: Dataset,
    cell: CellSpec,
    train_cfg: TrainConfig | None = None,
    diffusion_spec: DiffusionSpec | None = None,
    eval_spec: EvalSpec | None = None,
    cfg: SimConfig = DEFAULT_CONFIG,
    out_dir: Path | None = None,
) -> tuple[Checkpoint, EvalReport]:
    """Train and evaluate one matrix cell."""
    eval_spec = eval_spec or EvalSpec()
    space = space_for(cell.space_kind, cell.policy_kind, cell.lam)
    ds_hash = dataset.content_hash()

    if cell.policy_kind == "mlp":
        tc = train_cfg or MLP_TRAIN_DEFAULTS
        tc = TrainConfig(tc.learning_rate, tc.batch_size, tc.epochs, cell.seed)
        td = transform_dataset(dataset.episodes, space, action_horizon=1)
        ckpt = train_mlp(
            td.states,
            td.actions,
            space,
            tc,
            extra_meta={"dataset_hash": ds_hash, "cell": cell.name, "layout": td.layout},
        )
    elif cell.policy_kind == "diffusion":
        dspec = diffusion_spec or DiffusionSpec()
        tc = train_cfg or DIFFUSION_TRAIN_DEFAULTS
        tc = TrainConfig(tc.learning_rate, tc.batch_size, tc.epochs, cell.seed)
        td = transform_dataset(dataset.episodes, space, action_horizon=dspec.pred_horizon)
        ckpt = ddpm_train(
            td.states,
            td.actions,
            td.valid,
            space,
            dspec,
            tc,
            extra_meta={"dataset_hash": ds_hash, "cell": cell.name, "layout": td.layout},
        )
    else:
        raise ValueError(f"unknown policy kind {cell.policy_kind!r}")

    report = evaluate(ckpt, eval_spec, cfg, meta={"cell": cell.name, "dataset_hash": ds_hash})
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ckpt.save(out_dir / f"{cell.name}.ckpt")
        report.save(out_dir / f"{cell.name}.report.json")
    return ckpt, report


def _cell_worker(args):
    dataset, cell, train_cfg, diffusion_spec, eval_spec, cfg, out_dir, limit_threads = args
    try:
        if limit_threads:
            try:  # parallel cells each get one BLAS thread
                from threadpoolctl import threadpool_limits
            except ImportError:
                threadpool_limits = None
            if threadpool_limits is not None:
                with threadpool_limits(limits=1):
                    return cell, train_cell(
                        dataset, cell, train_cfg, diffusion_spec, eval_spec, cfg, out_dir
                    )[1], None
        ckpt, report = train_cell(dataset, cell, train_cfg, diffusion_spec, eval_spec, cfg, out_dir)
        return cell, report, None
    except Exception:
        return cell, None, traceback.format_exc()


@dataclass
class MatrixResult:
    reports: dict[str, EvalReport] = field(default_factory=dict)  # cell name -> report
    failures: dict[str, str] = field(default_factory=dict)
    dataset_hash: str = ""

    def aggregate(self, space_kind: str, policy_kind: str, lam: float | None = None) -> dict:
        """Across-seed mean/std of per-bin mean rewards for one condition."""
        sel = [
            r
            for name, r in self.reports.items()
            if r.meta["space"]["kind"] == space_kind
            and r.meta["checkpoint_kind"] == policy_kind
            and (lam is None or r.meta["space"]["lambda"] == lam)
        ]
        if not sel:
            return {"bins": [], "n_seeds": 0}
        per_seed = np.array(
            [[np.nan if m is None else m for m in r.bin_means] for r in sel]
        )  # (seeds, bins)
        counts = [b["count"] for b in sel[0].bins]
        occupied = ~np.all(np.isnan(per_seed), axis=0)
        return {
            "bins": [
                {
                    "bin": i,
                    "count": counts[i],
                    "mean_reward": float(np.mean(per_seed[:, i])) if occupied[i] else None,
                    "std_reward": float(np.std(per_seed[:, i])) if occupied[i] else None,
                }
                for i in range(per_seed.shape[1])
            ],
            "n_seeds": len(sel),
        }

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "dataset_hash": self.dataset_hash,
            "reports": {k: r.to_dict() for k, r in sorted(self.reports.items())},
            "failures": self.failures,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
        self._save_summary_csv(path.with_suffix(".summary.csv"))
        return path

    def _save_summary_csv(self, path: Path) -> None:
        with open(path, "w", newline="") as f:
            wr = csv.writer(f)
            wr.writerow(["cell", "space", "kind", "seed", "bin", "lo", "hi", "count", "mean_reward"])
            for name, rep in sorted(self.reports.items()):
                space = rep.meta["space"]["kind"]
                kind = rep.meta["checkpoint_kind"]
                seed = rep.meta["train_meta"]["train_config"]["seed"]
                for i, b in enumerate(rep.bins):
                    wr.writerow(
                        [name, space, kind, seed, i, b["lo"], b["hi"], b["count"],
                         "" if b["mean_reward"] is None else repr(b["mean_reward"])]
                    )


def run_matrix(
    dataset: Dataset,
    spaces: tuple[str, ...] = ("p", "t1", "t2"),
    policy_kinds: tuple[str, ...] = ("mlp",),
    seeds: tuple[int, ...] = (0, 1, 2),
    lam: float = DEFAULT_LAMBDA,
    train_cfg: TrainConfig | None = None,
    diffusion_spec: DiffusionSpec | None = None,
    eval_spec: EvalSpec | None = None,
    cfg: SimConfig = DEFAULT_CONFIG,
    out_dir=None,
    n_workers: int = 2,
) -> MatrixResult:
    """Train and evaluate every (space, policy, seed) cell on one dataset.

    Hyperparameters are per policy class and identical across spaces. A
    failing cell is recorded and the rest of the matrix continues.
    """
    cells = [
        CellSpec(sk, pk, seed, lam if sk == "t2" else None)
        for pk in policy_kinds
        for sk in spaces
        for seed in seeds
    ]
    return _run_cells(cells, dataset, train_cfg, diffusion_spec, eval_spec, cfg, out_dir, n_workers)


def _run_cells(
    cells, dataset, train_cfg, diffusion_spec, eval_spec, cfg, out_dir, n_workers
) -> MatrixResult:
    result = MatrixResult(dataset_hash=dataset.content_hash())
    parallel = n_workers > 1 and len(cells) > 1
    args = [(dataset, c, train_cfg, diffusion_spec, eval_spec, cfg, out_dir, parallel) for c in cells]
    if not parallel:
        outs = [_cell_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            outs = list(ex.map(_cell_worker, args))
    for cell, report, err in outs:
        if err is None:
            result.reports[cell.name] = report
        else:
            result.failures[cell.name] = err
    return result


def ablate_lambda(
    dataset: Dataset,
    lambdas: tuple[float, ...] = (30.0, 150.0, 600.0),
    seeds: tuple[int, ...] = (0, 1, 2),
    policy_kind: str = "mlp",
    train_cfg: TrainConfig | None = None,
    diffusion_spec: DiffusionSpec | None = None,
    eval_spec: EvalSpec | None = None,
    cfg: SimConfig = DEFAULT_CONFIG,
    out_dir=None,
    n_workers: int = 2,
    selected: float = DEFAULT_LAMBDA,
) -> dict:
    """Train T2 policies over a grid of projection radii; report in-dist and
    farthest-OOD-bin mean final reward per lambda, as a table, CSV and plot."""
    if not lambdas:
        raise ValueError("lambdas must be non-empty")
    cells = [
        CellSpec("t2", policy_kind, seed, lam) for lam in lambdas for seed in seeds
    ]
    res = _run_cells(cells, dataset, train_cfg, diffusion_spec, eval_spec, cfg, out_dir, n_workers)

    rows = []
    for cell in cells:
        rep = res.reports.get(cell.name)
        if rep is None:
            continue
        far = _farthest_occupied_bin(rep)
        rows.append(
            {
                "lambda": cell.lam,
                "seed": cell.seed,
                "in_dist_mean": rep.bins[0]["mean_reward"],
                "far_bin": far,
                "far_bin_mean": rep.bins[far]["mean_reward"],
            }
        )
    table = {
        "rows": rows,
        "by_lambda": [
            {
                "lambda": lam,
                "in_dist_mean": float(np.mean([r["in_dist_mean"] for r in rows if r["lambda"] == lam])),
                "far_bin_mean": float(np.mean([r["far_bin_mean"] for r in rows if r["lambda"] == lam])),
            }
            for lam in lambdas
            if any(r["lambda"] == lam for r in rows)
        ],
        "selected": selected,
        "failures": res.failures,
        "dataset_hash": res.dataset_hash,
    }
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "lambda_ablation.csv", "w", newline="") as f:
            wr = csv.DictWriter(f, fieldnames=["lambda", "seed", "in_dist_mean", "far_bin", "far_bin_mean"])
            wr.writeheader()
            wr.writerows(rows)
        _plot_ablation(table, out_dir / "lambda_ablation.svg")
    return table


def _farthest_occupied_bin(report: EvalReport, min_count: int = 20) -> int:
    """Outermost bin with enough episodes to average meaningfully. The outer
    OOD radii extend past the workspace corners, so the last bins of the
    nominal [0, 1] partition are nearly empty."""
    occupied = [i for i, b in enumerate(report.bins) if b["count"] >= min_count]
    return occupied[-1] if occupied else 0


def _plot_ablation(table: dict, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    lams = [row["lambda"] for row in table["by_lambda"]]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(lams, [r["in_dist_mean"] for r in table["by_lambda"]], "o-", label="in-distribution")
    ax.plot(lams, [r["far_bin_mean"] for r in table["by_lambda"]], "s-", label="farthest OOD bin")
    ax.axvline(table["selected"], linestyle=":", color="k", label=f"selected ({table['selected']:g}px)")
    ax.set_xscale("log")
    ax.set_xlabel("projection radius (px)")
    ax.set_ylabel("mean final reward")
    ax.set_ylim(0, 1)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
