"""Checkpoint container: one zip file holding a meta.json plus the weight
arrays as little-endian float32 .npy entries.

Zip entries get a fixed timestamp and no compression, so saving the same
checkpoint twice produces byte-identical files — reruns of a whole pipeline
can be compared by file hash.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..spaces import SpaceSpec
from .nets import MlpSpec
from .standardize import Standardiser

__all__ = ["TrainConfig", "Checkpoint"]

FORMAT_VERSION = 1
_ZIP_DATE = (1980, 1, 1, 0, 0, 0)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 1024
    epochs: int = 1200
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "TrainConfig":
        return TrainConfig(**d)


DIFFUSION_TRAIN_DEFAULTS = TrainConfig(learning_rate=1e-4, batch_size=256, epochs=5010)


@dataclass
class Checkpoint:
    """Trained policy weights plus everything needed to run them: the problem
    space, the input/output standardisers, and the architecture specs."""

    kind: str  # "mlp" | "diffusion"
    params: list[np.ndarray]
    space: SpaceSpec
    mlp_spec: MlpSpec
    x_standardiser: Standardiser
    y_standardiser: Standardiser
    diffusion_spec: "object | None" = None  # DiffusionSpec for kind="diffusion"
    train_meta: dict = field(default_factory=dict)
    loss_curve: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def save(self, path) -> Path:
        from .diffusion import DiffusionSpec  # local import, avoids a cycle

        path = Path(path)
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "space": self.space.to_dict(),
            "mlp_spec": self.mlp_spec.to_dict(),
            "diffusion_spec": None
            if self.diffusion_spec is None
            else self.diffusion_spec.to_dict(),
            "x_standardiser": self.x_standardiser.to_dict(),
            "y_standardiser": self.y_standardiser.to_dict(),
            "train_meta": self.train_meta,
            "n_arrays": len(self.params),
            "shapes": [list(p.shape) for p in self.params],
        }
        with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as zf:
            zf.writestr(
                zipfile.ZipInfo("meta.json", date_time=_ZIP_DATE),
                json.dumps(meta, indent=2),
            )
            for i, p in enumerate(self.params):
                buf = io.BytesIO()
                np.save(buf, np.ascontiguousarray(p, dtype="<f4"))
                zf.writestr(zipfile.ZipInfo(f"weights/{i:03d}.npy", date_time=_ZIP_DATE), buf.getvalue())
        curve_path = path.with_suffix(path.suffix + ".loss.csv")
        lines = ["epoch,mean_loss"] + [
            f"{i},{v!r}" for i, v in enumerate(np.asarray(self.loss_curve).tolist())
        ]
        curve_path.write_text("\n".join(lines) + "\n")
        return path

    @staticmethod
    def load(path) -> "Checkpoint":
        from .diffusion import DiffusionSpec

        path = Path(path)
        with zipfile.ZipFile(path, "r") as zf:
            meta = json.loads(zf.read("meta.json"))
            if meta["format_version"] != FORMAT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta['format_version']}")
            params = []
            for i in range(meta["n_arrays"]):
                buf = io.BytesIO(zf.read(f"weights/{i:03d}.npy"))
                # float32 on disk; compute in float64
                params.append(np.load(buf).astype(np.float64))
        curve_path = path.with_suffix(path.suffix + ".loss.csv")
        curve = np.zeros(0)
        if curve_path.exists():
            rows = curve_path.read_text().strip().splitlines()[1:]
            curve = np.array([float(r.split(",")[1]) for r in rows]) if rows else curve
        return Checkpoint(
            kind=meta["kind"],
            params=params,
            space=SpaceSpec.from_dict(meta["space"]),
            mlp_spec=MlpSpec.from_dict(meta["mlp_spec"]),
            diffusion_spec=None
            if meta["diffusion_spec"] is None
            else DiffusionSpec.from_dict(meta["diffusion_spec"]),
            x_standardiser=Standardiser.from_dict(meta["x_standardiser"]),
            y_standardiser=Standardiser.from_dict(meta["y_standardiser"]),
            train_meta=meta["train_meta"],
            loss_curve=curve,
        )
