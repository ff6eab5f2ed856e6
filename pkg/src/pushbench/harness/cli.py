"""Command-line interface.

Every flag can also be set in a JSON config file (flat keys or per-command
sections); explicit command-line values win over the file.
"""
from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import numpy as np

from ..geometry import ProjectionRadius
from ..learn import Checkpoint, DiffusionSpec, TrainConfig
from ..sim import DEFAULT_CONFIG, IN_DIST_MANIFOLD, OOD_MANIFOLD, SamplingManifold
from .dataset import collect_scripted, load_dataset, save_dataset
from .evaluation import EvalReport, EvalSpec, evaluate
from .heatmap import export_heatmap
from .matrix import CellSpec, ablate_lambda, run_matrix, train_cell

__all__ = ["main"]


def _manifold(text: str) -> SamplingManifold:
    if text in ("in", "in-dist", "in_dist"):
        return IN_DIST_MANIFOLD
    if text in ("ood", "out"):
        return OOD_MANIFOLD
    r_min, r_max = (float(v) for v in text.split(":"))
    return SamplingManifold(r_min=r_min, r_max=r_max)


def _seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s != "")


def _lambdas(text: str) -> tuple[float, ...]:
    return tuple(float(s) for s in text.split(",") if s != "")


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pushbench", description=__doc__)
    p.add_argument("--config", type=Path, default=None, help="JSON config file with flag defaults")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("collect", help="collect scripted demonstrations")
    c.add_argument("--n", type=int, default=200)
    c.add_argument("--manifold", type=str, default="in")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", type=Path, default=Path("demos.jsonl"))

    t = sub.add_parser("teleop", help="serve the human-demonstration bridge")
    t.add_argument("--port", type=int, default=8765)
    t.add_argument("--out", type=Path, default=Path("human_demos.jsonl"))
    t.add_argument("--manifold", type=str, default="in")
    t.add_argument("--seed", type=int, default=0)

    tr = sub.add_parser("train", help="train one policy")
    tr.add_argument("--dataset", type=Path, required=True)
    tr.add_argument("--space", choices=("p", "t1", "t2"), default="t2")
    tr.add_argument("--lambda", dest="lam", type=float, default=150.0)
    tr.add_argument("--kind", choices=("mlp", "diffusion"), default="mlp")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--epochs", type=int, default=None)
    tr.add_argument("--out", type=Path, default=Path("runs"))

    e = sub.add_parser("eval", help="evaluate a checkpoint")
    e.add_argument("--ckpt", type=Path, required=True)
    e.add_argument("--spec", type=Path, default=None, help="EvalSpec JSON file")
    e.add_argument("--out", type=Path, default=Path("report.json"))

    m = sub.add_parser("matrix", help="train x evaluate all spaces and seeds")
    m.add_argument("--dataset", type=Path, required=True)
    m.add_argument("--seeds", type=str, default="0,1,2")
    m.add_argument("--kinds", type=str, default="mlp")
    m.add_argument("--epochs", type=int, default=None)
    m.add_argument("--workers", type=int, default=2)
    m.add_argument("--out", type=Path, default=Path("matrix_out"))

    a = sub.add_parser("ablate-lambda", help="lambda ablation for T2")
    a.add_argument("--dataset", type=Path, required=True)
    a.add_argument("--lambdas", type=str, default="30,150,600")
    a.add_argument("--seeds", type=str, default="0,1,2")
    a.add_argument("--kind", choices=("mlp", "diffusion"), default="mlp")
    a.add_argument("--epochs", type=int, default=None)
    a.add_argument("--workers", type=int, default=2)
    a.add_argument("--out", type=Path, default=Path("ablation_out"))

    h = sub.add_parser("heatmap", help="render a heat map from a report")
    h.add_argument("--report", type=Path, required=True)
    h.add_argument("--out", type=Path, default=Path("heatmap"))
    return p


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser, argv: list[str]) -> None:
    """Fill flags from the config file wherever the command line used defaults."""
    if args.config is None:
        return
    conf = json.loads(Path(args.config).read_text())
    section = conf.get(args.command, {})
    flat = {k: v for k, v in conf.items() if not isinstance(v, dict)}
    merged = {**flat, **section}
    explicit = {a.lstrip("-").split("=")[0].replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in merged.items():
        key = key.replace("-", "_")
        if key in ("config", "command") or key in explicit or not hasattr(args, key):
            continue
        cur = getattr(args, key)
        setattr(args, key, type(cur)(value) if cur is not None else value)


def _train_cfg(kind: str, epochs: int | None, seed: int) -> TrainConfig:
    if kind == "mlp":
        base = TrainConfig(learning_rate=1e-3, batch_size=1024, epochs=epochs or 1200, seed=seed)
    else:
        base = TrainConfig(learning_rate=1e-4, batch_size=256, epochs=epochs or 5010, seed=seed)
    return base


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = _build_parser()
    args = parser.parse_args(argv)
    _apply_config(args, parser, argv)

    if args.command == "collect":
        ds = collect_scripted(args.n, _manifold(args.manifold), base_seed=args.seed)
        path = save_dataset(ds, args.out)
        print(f"wrote {len(ds)} episodes ({ds.n_steps()} steps) to {path}")

    elif args.command == "teleop":
        from .teleop import serve_teleop

        print(f"teleop bridge on ws://localhost:{args.port}, recording to {args.out}")
        asyncio.run(
            serve_teleop(args.port, args.out, _manifold(args.manifold), base_seed=args.seed)
        )

    elif args.command == "train":
        ds = load_dataset(args.dataset)
        cell = CellSpec(args.space, args.kind, args.seed, args.lam if args.space == "t2" else None)
        cfg = _train_cfg(args.kind, args.epochs, args.seed)
        ckpt, report = train_cell(ds, cell, train_cfg=cfg, out_dir=args.out)
        print(f"cell {cell.name}: bin means {['%.3f' % b['mean_reward'] for b in report.bins]}")

    elif args.command == "eval":
        ckpt = Checkpoint.load(args.ckpt)
        spec = EvalSpec.from_dict(json.loads(args.spec.read_text())) if args.spec else EvalSpec()
        report = evaluate(ckpt, spec)
        report.save(args.out)
        print(f"report -> {args.out}: bin means {['%.3f' % b['mean_reward'] for b in report.bins]}")

    elif args.command == "matrix":
        ds = load_dataset(args.dataset)
        kinds = tuple(args.kinds.split(","))
        epochs = args.epochs
        result = run_matrix(
            ds,
            policy_kinds=kinds,
            seeds=_seeds(args.seeds),
            train_cfg=None if epochs is None else _train_cfg(kinds[0], epochs, 0),
            out_dir=args.out,
            n_workers=args.workers,
        )
        result.save(Path(args.out) / "matrix.json")
        for kind in kinds:
            for space in ("p", "t1", "t2"):
                agg = result.aggregate(space, kind)
                means = ["%.3f" % b["mean_reward"] for b in agg["bins"]]
                print(f"{kind}/{space}: {means} over {agg['n_seeds']} seeds")
        if result.failures:
            print(f"failed cells: {sorted(result.failures)}", file=sys.stderr)

    elif args.command == "ablate-lambda":
        ds = load_dataset(args.dataset)
        table = ablate_lambda(
            ds,
            lambdas=_lambdas(args.lambdas),
            seeds=_seeds(args.seeds),
            policy_kind=args.kind,
            train_cfg=None if args.epochs is None else _train_cfg(args.kind, args.epochs, 0),
            out_dir=args.out,
            n_workers=args.workers,
        )
        for row in table["by_lambda"]:
            print(
                f"lambda={row['lambda']:g}: in-dist {row['in_dist_mean']:.3f}, "
                f"far bin {row['far_bin_mean']:.3f}"
            )

    elif args.command == "heatmap":
        report = EvalReport.load(args.report)
        out = export_heatmap(report, args.out)
        print(f"heatmap: {out}")

    return 0


if __name__ == "__main__":
    sys.exit(main())
