"""Simple ANN vs. neurosymbolic comparison runs.

Pipeline: load -> augment/split (either order) -> standardize with training
statistics only -> train the network -> evaluate

* ``simple_ann``: the network's own output head.
* ``neurosymbolic``: a regression tree fit on the second hidden layer
  activations of the same kind of network.

Every run writes CSV artifacts, the saved network, and a JSON manifest into
the configured output directory.
"""

from __future__ import annotations

import json
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .augment import augment_tabular
from .config import ExperimentConfig
from .data import (
    Dataset,
    ScalerStats,
    TrainValSplit,
    dataset_hash,
    format_float,
    load_dataset,
    serialize_dataset,
    split,
    standardize,
)
from .metrics import REPORT_COLUMNS, ModelReport, evaluate
from .mlp import (
    LossHistory,
    MlpParams,
    TrainConfig,
    extract_features,
    predict,
    save_params,
    train,
)
from .rng import stream_key
from .symtree import (
    RegressionTree,
    TreeConfig,
    export_rules,
    fit_tree,
    predict_many,
    save_tree,
)

logger = logging.getLogger(__name__)

SIMPLE_ANN = "simple_ann"
NEUROSYMBOLIC = "neurosymbolic"
ALGORITHMS: tuple[str, ...] = (SIMPLE_ANN, NEUROSYMBOLIC)


@dataclass(frozen=True, eq=False)
class PreparedData:
    """Model-ready matrices plus the provenance needed to reproduce them."""

    source: Dataset
    dataset: Dataset
    split: TrainValSplit
    scaler: ScalerStats
    X_train: np.ndarray
    y_train: np.ndarray
    X_val: np.ndarray
    y_val: np.ndarray


@dataclass(eq=False)
class RunArtifacts:
    algorithm: str
    report: ModelReport
    params: MlpParams
    train_config: TrainConfig
    history: LossHistory
    prepared: PreparedData
    pred_train: np.ndarray
    pred_val: np.ndarray
    tree: RegressionTree | None = None


@dataclass(eq=False)
class ComparisonTable:
    """One :class:`ModelReport` per algorithm, all measured on one split."""

    reports: dict[str, ModelReport]
    split: TrainValSplit
    artifacts: dict[str, RunArtifacts] = field(default_factory=dict, repr=False)

    def to_csv(self) -> str:
        lines = [",".join(REPORT_COLUMNS)]
        lines += [self.reports[name].as_row(name) for name in ALGORITHMS if name in self.reports]
        return "\n".join(lines) + "\n"

    def winners(self) -> dict[str, str]:
        """Best algorithm per metric (lower MSE, higher R^2); ``tie`` on equality."""

        ann, ns = self.reports[SIMPLE_ANN], self.reports[NEUROSYMBOLIC]
        out: dict[str, str] = {}
        for metric in REPORT_COLUMNS[1:]:
            a, b = getattr(ann, metric), getattr(ns, metric)
            if a == b:
                out[metric] = "tie"
            elif (a < b) == metric.startswith("mse"):
                out[metric] = SIMPLE_ANN
            else:
                out[metric] = NEUROSYMBOLIC
        return out


@dataclass(eq=False)
class SweepResult:
    seeds: list[int]
    tables: list[ComparisonTable]

    def median_val_mse(self, algorithm: str) -> float:
        return statistics.median(t.reports[algorithm].mse_val for t in self.tables)

    def to_csv(self) -> str:
        lines = ["seed," + ",".join(REPORT_COLUMNS)]
        for seed, table in zip(self.seeds, self.tables):
            lines += [f"{seed},{table.reports[name].as_row(name)}" for name in ALGORITHMS]
        return "\n".join(lines) + "\n"


# -------------------------------------------------------------------
# Data preparation
# -------------------------------------------------------------------
def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def prepare_data(config: ExperimentConfig) -> PreparedData:
    source = load_dataset(config.data_path)
    frac, seed = config.split.train_fraction, config.split.seed

    if config.split.split_first:
        # Augment each partition from its own originals so no synthetic row
        # shares a parent across train and validation.
        parts = split(source, frac, seed)
        train_src = source.subset(parts.train_indices)
        val_src = source.subset(parts.val_indices)
        n_train = max(len(train_src), _round_half_up(config.augment.target_size * frac))
        n_val = max(len(val_src), config.augment.target_size - n_train)
        train_aug = augment_tabular(
            train_src,
            config.augment.model_copy(update={"target_size": n_train}),
            stream="augment-train",
        )
        val_aug = augment_tabular(
            val_src,
            config.augment.model_copy(update={"target_size": n_val}),
            stream="augment-val",
        )
        dataset = train_aug.concat(val_aug)
        n = len(dataset)
        split_ = TrainValSplit(
            tuple(range(len(train_aug))), tuple(range(len(train_aug), n)), seed, n
        )
    else:
        dataset = augment_tabular(source, config.augment)
        split_ = split(dataset, frac, seed)

    train_rows = dataset.subset(split_.train_indices)
    val_rows = dataset.subset(split_.val_indices)
    scaled_train, scaler = standardize(train_rows)
    logger.info(
        "prepared %d rows from %d originals: %d train / %d validation (split_first=%s)",
        len(dataset),
        len(source),
        len(train_rows),
        len(val_rows),
        config.split.split_first,
    )
    return PreparedData(
        source=source,
        dataset=dataset,
        split=split_,
        scaler=scaler,
        X_train=scaled_train.features,
        y_train=train_rows.targets,
        X_val=scaler.transform(val_rows.features),
        y_val=val_rows.targets,
    )


# -------------------------------------------------------------------
# Models
# -------------------------------------------------------------------
def train_network(
    prepared: PreparedData, train_config: TrainConfig
) -> tuple[MlpParams, LossHistory]:
    logger.info(
        "training %s network for %d epochs (batch %d, lr %g, seed %d)",
        "x".join(str(h) for h in (4, *train_config.hidden, 1)),
        train_config.epochs,
        train_config.batch_size,
        train_config.learning_rate,
        train_config.seed,
    )
    return train(
        (prepared.X_train, prepared.y_train),
        (prepared.X_val, prepared.y_val),
        train_config,
    )


def evaluate_simple_ann(
    prepared: PreparedData, params: MlpParams, history: LossHistory, train_config: TrainConfig
) -> RunArtifacts:
    pred_train = predict(params, prepared.X_train)
    pred_val = predict(params, prepared.X_val)
    report = evaluate(prepared.y_train, pred_train, prepared.y_val, pred_val)
    return RunArtifacts(
        SIMPLE_ANN, report, params, train_config, history, prepared, pred_train, pred_val
    )


def evaluate_neurosymbolic(
    prepared: PreparedData,
    params: MlpParams,
    history: LossHistory,
    train_config: TrainConfig,
    tree_config: TreeConfig,
) -> RunArtifacts:
    f_train = extract_features(params, prepared.X_train)
    f_val = extract_features(params, prepared.X_val)
    tree = fit_tree(f_train, prepared.y_train, tree_config)
    pred_train = predict_many(tree, f_train)
    pred_val = predict_many(tree, f_val)
    report = evaluate(prepared.y_train, pred_train, prepared.y_val, pred_val)
    return RunArtifacts(
        NEUROSYMBOLIC, report, params, train_config, history, prepared, pred_train, pred_val, tree
    )


# -------------------------------------------------------------------
# Artifacts
# -------------------------------------------------------------------
def _pairs_csv(y_true: np.ndarray, y_pred: np.ndarray) -> str:
    lines = ["true,predicted"]
    lines += [f"{format_float(t)},{format_float(p)}" for t, p in zip(y_true, y_pred)]
    return "\n".join(lines) + "\n"


def export_plot_data(
    artifacts: RunArtifacts, out_dir: str | Path, loss_name: str = "loss_history.csv"
) -> list[Path]:
    """Write the loss curve and true-vs-predicted CSVs for one run."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        loss_name: artifacts.history.to_csv(),
        f"pred_train_{artifacts.algorithm}.csv": _pairs_csv(
            artifacts.prepared.y_train, artifacts.pred_train
        ),
        f"pred_val_{artifacts.algorithm}.csv": _pairs_csv(
            artifacts.prepared.y_val, artifacts.pred_val
        ),
    }
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)
    return written


def _save_network(artifacts: RunArtifacts, path: Path) -> Path:
    extra = {"scaler": artifacts.prepared.scaler.to_dict()}
    return save_params(path, artifacts.params, artifacts.train_config, extra)


def _save_tree(artifacts: RunArtifacts, out: Path) -> None:
    assert artifacts.tree is not None
    save_tree(out / "tree.json", artifacts.tree)
    (out / "rules.txt").write_text(export_rules(artifacts.tree), encoding="utf-8")


def write_manifest(
    config: ExperimentConfig,
    prepared: PreparedData,
    out_dir: Path,
    extra: dict[str, Any] | None = None,
) -> Path:
    from . import __version__

    manifest = {
        "package": "neurosym",
        "version": __version__,
        "numpy_version": np.__version__,
        "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": config.model_dump(mode="json"),
        "seeds": {
            "augment": config.augment.seed,
            "split": config.split.seed,
            "train": config.train.seed,
        },
        "dataset_sha256": dataset_hash(prepared.source),
        "augmented_sha256": dataset_hash(prepared.dataset),
        "n_train": len(prepared.split.train_indices),
        "n_val": len(prepared.split.val_indices),
        **(extra or {}),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_common(config: ExperimentConfig, prepared: PreparedData) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "augmented.csv").write_text(serialize_dataset(prepared.dataset), encoding="utf-8")
    return out


# -------------------------------------------------------------------
# Runners
# -------------------------------------------------------------------
def run_simple_ann(config: ExperimentConfig) -> tuple[ModelReport, RunArtifacts]:
    prepared = prepare_data(config)
    params, history = train_network(prepared, config.train)
    artifacts = evaluate_simple_ann(prepared, params, history, config.train)

    out = _write_common(config, prepared)
    _save_network(artifacts, out / "model.nsmlp")
    export_plot_data(artifacts, out)
    write_manifest(config, prepared, out, {"algorithms": [SIMPLE_ANN]})
    logger.info("simple_ann: %s", artifacts.report)
    return artifacts.report, artifacts


def run_neurosymbolic(config: ExperimentConfig) -> tuple[ModelReport, RunArtifacts]:
    prepared = prepare_data(config)
    params, history = train_network(prepared, config.train)
    artifacts = evaluate_neurosymbolic(prepared, params, history, config.train, config.tree)

    out = _write_common(config, prepared)
    _save_network(artifacts, out / "model.nsmlp")
    _save_tree(artifacts, out)
    export_plot_data(artifacts, out)
    write_manifest(config, prepared, out, {"algorithms": [NEUROSYMBOLIC]})
    logger.info("neurosymbolic: %s", artifacts.report)
    return artifacts.report, artifacts


def independent_train_config(config: ExperimentConfig) -> TrainConfig:
    """Training config for a neurosymbolic network trained apart from the ANN's."""

    seed = (config.train.seed ^ stream_key(NEUROSYMBOLIC)) & 0x7FFFFFFF
    return config.train.model_copy(update={"seed": seed})


def compare(config: ExperimentConfig) -> ComparisonTable:
    """Evaluate both algorithms on one prepared split and write ``comparison.csv``."""

    prepared = prepare_data(config)
    params, history = train_network(prepared, config.train)
    ann = evaluate_simple_ann(prepared, params, history, config.train)

    out = _write_common(config, prepared)
    _save_network(ann, out / "model.nsmlp")
    export_plot_data(ann, out)

    if config.shared_network:
        ns = evaluate_neurosymbolic(prepared, params, history, config.train, config.tree)
        export_plot_data(ns, out)
    else:
        ns_config = independent_train_config(config)
        ns_params, ns_history = train_network(prepared, ns_config)
        ns = evaluate_neurosymbolic(prepared, ns_params, ns_history, ns_config, config.tree)
        _save_network(ns, out / "model_neurosymbolic.nsmlp")
        export_plot_data(ns, out, loss_name="loss_history_neurosymbolic.csv")
    _save_tree(ns, out)

    table = ComparisonTable(
        {SIMPLE_ANN: ann.report, NEUROSYMBOLIC: ns.report},
        prepared.split,
        {SIMPLE_ANN: ann, NEUROSYMBOLIC: ns},
    )
    (out / "comparison.csv").write_text(table.to_csv(), encoding="utf-8")
    write_manifest(
        config,
        prepared,
        out,
        {"algorithms": list(ALGORITHMS), "winners": table.winners()},
    )
    logger.info("comparison written to %s", out / "comparison.csv")
    return table


def _seed_config(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    return config.with_seed(seed).model_copy(
        update={"output_dir": Path(config.output_dir) / f"seed_{seed}"}
    )


def sweep(
    config: ExperimentConfig, seeds: Sequence[int] | Iterable[int], max_workers: int = 1
) -> SweepResult:
    """Run :func:`compare` once per seed, each in its own ``seed_<k>`` directory."""

    seeds = list(seeds)
    configs = [_seed_config(config, s) for s in seeds]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            tables = list(pool.map(compare, configs))
    else:
        tables = [compare(c) for c in configs]
    # Only the reports outlive the sweep.
    for table in tables:
        table.artifacts.clear()
    result = SweepResult(seeds, tables)

    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(result.to_csv(), encoding="utf-8")
    return result
