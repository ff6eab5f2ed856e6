"""Reward-per-initial-position heat maps.

Writes the raw (x, y, final_reward) triples as CSV and, given at least three
episodes, an inverse-distance-weighted interpolation (power 2, 12 nearest
neighbours) on a 128x128 grid rendered with the demo torus overlaid.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from ..sim import DEFAULT_CONFIG, SimConfig
from .evaluation import EvalReport

__all__ = ["export_heatmap", "idw_grid"]

GRID_N = 128
IDW_POWER = 2
IDW_NEIGHBOURS = 12


def idw_grid(
    points: np.ndarray,
    values: np.ndarray,
    extent: float,
    grid_n: int = GRID_N,
    k: int = IDW_NEIGHBOURS,
    power: int = IDW_POWER,
) -> np.ndarray:
    """Inverse-distance-weighted interpolation onto a grid_n x grid_n grid.

    A convex combination of neighbour values: the output range never exceeds
    the input range. Exact hits take the sample value.
    """
    tree = cKDTree(points)
    xs = (np.arange(grid_n) + 0.5) * (extent / grid_n)
    gx, gy = np.meshgrid(xs, xs)
    q = np.column_stack([gx.ravel(), gy.ravel()])
    k = min(k, len(points))
    dist, idx = tree.query(q, k=k)
    if k == 1:
        dist = dist[:, None]
        idx = idx[:, None]
    exact = dist[:, 0] < 1e-9
    with np.errstate(divide="ignore"):
        w = 1.0 / dist**power
    w[exact] = 0.0
    w[exact, 0] = 1.0
    out = np.sum(w * values[idx], axis=1) / np.sum(w, axis=1)
    return out.reshape(grid_n, grid_n)


def export_heatmap(
    report: EvalReport,
    out_prefix,
    cfg: SimConfig = DEFAULT_CONFIG,
    values: np.ndarray | None = None,
) -> dict:
    """CSV always; interpolated SVG image when >= 3 episodes are available.

    `values` optionally overrides per-episode rewards (e.g. a cross-seed mean
    at shared initial positions)."""
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    eps = report.episodes
    pts = np.array([[e["x"], e["y"]] for e in eps], dtype=float)
    vals = np.array([e["final_reward"] for e in eps], dtype=float) if values is None else np.asarray(values, dtype=float)

    csv_path = out_prefix.with_suffix(".csv")
    with open(csv_path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["x", "y", "final_reward"])
        for p, v in zip(pts, vals):
            wr.writerow([repr(float(p[0])), repr(float(p[1])), repr(float(v))])

    result = {"csv": str(csv_path), "image": None, "n": len(eps)}
    if len(eps) < 3:
        return result

    grid = idw_grid(pts, vals, cfg.workspace)
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.4, 4))
    im = ax.imshow(
        grid,
        origin="lower",
        extent=(0, cfg.workspace, 0, cfg.workspace),
        vmin=0.0,
        vmax=1.0,
        cmap="viridis",
    )
    in_man = report.meta.get("eval_spec", {}).get("in_dist_manifold", {})
    for radius in (in_man.get("r_min"), in_man.get("r_max")):
        if radius:
            ax.add_patch(
                plt.Circle(cfg.target, radius, fill=False, color="red", linewidth=1.2)
            )
    ax.plot(*cfg.target, "r+", markersize=8)
    ax.set_xlim(0, cfg.workspace)
    ax.set_ylim(0, cfg.workspace)
    ax.set_xlabel("x (px)")
    ax.set_ylabel("y (px)")
    fig.colorbar(im, ax=ax, label="final reward", fraction=0.046)
    fig.tight_layout()
    img_path = out_prefix.with_suffix(".svg")
    fig.savefig(img_path)
    plt.close(fig)
    result["image"] = str(img_path)
    return result
