from .dataset import Dataset, collect_scripted, save_dataset, load_dataset
from .evaluation import EvalSpec, EvalReport, distance_to_manifold, evaluate, evaluation_states
from .policies import MlpPolicy, DiffusionPolicy, RecedingHorizonExecutor
from .matrix import run_matrix, ablate_lambda, MatrixResult
from .heatmap import export_heatmap

__all__ = [
    "Dataset",
    "collect_scripted",
    "save_dataset",
    "load_dataset",
    "EvalSpec",
    "EvalReport",
    "distance_to_manifold",
    "evaluate",
    "evaluation_states",
    "MlpPolicy",
    "DiffusionPolicy",
    "RecedingHorizonExecutor",
    "run_matrix",
    "ablate_lambda",
    "MatrixResult",
    "export_heatmap",
]
