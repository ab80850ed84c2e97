"""neurosym package initialization."""

from .augment import AugmentConfig, augment_tabular, sine_demo
from .config import ExperimentConfig, ModelKind, load_config
from .data import Dataset, ExperimentRecord, load_dataset, parse_dataset, split, standardize
from .experiment import compare, run_neurosymbolic, run_simple_ann
from .metrics import ModelReport, mse, r2
from .mlp import MlpParams, TrainConfig, extract_features, init_params, train
from .symtree import RegressionTree, TreeConfig, export_rules, fit_tree, predict_tree

__all__ = [
    "AugmentConfig",
    "augment_tabular",
    "sine_demo",
    "ExperimentConfig",
    "ModelKind",
    "load_config",
    "Dataset",
    "ExperimentRecord",
    "load_dataset",
    "parse_dataset",
    "split",
    "standardize",
    "compare",
    "run_neurosymbolic",
    "run_simple_ann",
    "ModelReport",
    "mse",
    "r2",
    "MlpParams",
    "TrainConfig",
    "extract_features",
    "init_params",
    "train",
    "RegressionTree",
    "TreeConfig",
    "export_rules",
    "fit_tree",
    "predict_tree",
    "__version__",
]
__version__ = "0.1.0"
