"""Per-dimension zero-mean unit-std scaling, fitted on the training set and
frozen into the checkpoint."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Standardiser"]

_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class Standardiser:
    mean: np.ndarray
    std: np.ndarray

    @staticmethod
    def fit(x: np.ndarray) -> "Standardiser":
        x = np.asarray(x, dtype=float).reshape(len(x), -1)
        std = np.maximum(x.std(axis=0), _STD_FLOOR)
        return Standardiser(mean=x.mean(axis=0), std=std)

    @staticmethod
    def identity(dim: int) -> "Standardiser":
        return Standardiser(mean=np.zeros(dim), std=np.ones(dim))

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def inverse(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "Standardiser":
        return Standardiser(mean=np.asarray(d["mean"]), std=np.asarray(d["std"]))
