"""Experiment configuration.

Config files are JSON with one section per stage::

    {
      "augment": {"target_size": 1000, "noise_scale": 0.05, "seed": 42},
      "split": {"train_fraction": 0.8, "split_first": false, "seed": 42},
      "train": {"epochs": 2000, "batch_size": 32, "learning_rate": 0.001, "seed": 42},
      "tree": {"max_depth": 4},
      "output_dir": "runs/default",
      "model_kind": "both"
    }

A missing ``data_path`` selects the bundled experimental table. The output
directory can be overridden by ``NEUROSYM_OUT_DIR`` (also read from ``.env``).
"""

from __future__ import annotations

import os
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from .augment import AugmentConfig
from .mlp import TrainConfig
from .symtree import TreeConfig

OUT_DIR_ENV = "NEUROSYM_OUT_DIR"


class ModelKind(str, Enum):
    simple_ann = "simple_ann"
    neurosymbolic = "neurosymbolic"
    both = "both"


class SplitConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)
    split_first: bool = False
    seed: int = 0


class ExperimentConfig(BaseModel):
    """Everything one run needs. Nested sections validate themselves."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    data_path: Optional[Path] = None
    augment: AugmentConfig = AugmentConfig()
    split: SplitConfig = SplitConfig()
    train: TrainConfig = TrainConfig()
    tree: TreeConfig = TreeConfig()
    output_dir: Path = Path("runs/default")
    model_kind: ModelKind = ModelKind.both
    # Compare mode: evaluate the head and the tree on one trained network.
    shared_network: bool = True

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Same config with every stage seeded from ``seed``."""

        return self.model_copy(
            update={
                "augment": self.augment.model_copy(update={"seed": seed}),
                "split": self.split.model_copy(update={"seed": seed}),
                "train": self.train.model_copy(update={"seed": seed}),
            }
        )

    def with_overrides(
        self,
        *,
        data_path: Path | None = None,
        seed: int | None = None,
        split_first: bool | None = None,
        model_kind: ModelKind | None = None,
    ) -> "ExperimentConfig":
        config = self.with_seed(seed) if seed is not None else self
        update: dict = {}
        if data_path is not None:
            update["data_path"] = data_path
        if split_first is not None:
            update["split"] = config.split.model_copy(update={"split_first": split_first})
        if model_kind is not None:
            update["model_kind"] = model_kind
        return config.model_copy(update=update) if update else config


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a JSON config file; relative ``data_path`` resolves against its directory.

    Raises:
        FileNotFoundError: the config or its ``data_path`` does not exist.
        pydantic.ValidationError: the content violates a section's constraints.
    """

    cfg_path = Path(path)
    config = ExperimentConfig.model_validate_json(cfg_path.read_text(encoding="utf-8"))
    if config.data_path is not None and not config.data_path.is_absolute():
        config = config.model_copy(update={"data_path": cfg_path.parent / config.data_path})
    check_paths(config)
    return config


def check_paths(config: ExperimentConfig) -> None:
    if config.data_path is not None and not config.data_path.is_file():
        raise FileNotFoundError(f"data file not found: {config.data_path}")


def resolve_output_dir(config: ExperimentConfig, flag: Path | None = None) -> ExperimentConfig:
    """Apply the ``--out-dir`` flag, else the environment override, to ``config``."""

    if flag is not None:
        return config.model_copy(update={"output_dir": flag})
    env = os.getenv(OUT_DIR_ENV)
    if env:
        return config.model_copy(update={"output_dir": Path(env)})
    return config
