"""Synthetic data generation.

Tabular augmentation is jittered resampling: bootstrap whole rows from the
source table and add zero-mean Gaussian noise scaled to each column's sample
standard deviation. Resampling whole rows keeps the cross-column structure of
the source. The sine demo shows the same idea on a one-dimensional curve.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .data import Dataset
from .errors import DataError
from .rng import derive_rng


class AugmentConfig(BaseModel):
    """Settings for :func:`augment_tabular`."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    target_size: int = Field(1000, ge=1)
    noise_scale: float = Field(0.05, ge=0.0)
    seed: int = 0
    clamp: bool = True


def _column_std(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < 2:
        return np.zeros(values.shape[1])
    return values.std(axis=0, ddof=1)


def augment_tabular(
    dataset: Dataset, config: AugmentConfig, *, stream: str = "augment"
) -> Dataset:
    """Expand ``dataset`` to ``config.target_size`` rows.

    The first ``len(dataset)`` rows are the originals verbatim. Each synthetic
    row is a uniformly drawn source row plus independent Gaussian noise with
    per-column std ``noise_scale * column_std``, applied to the features and the
    target. With ``clamp`` every column is clipped to the source's observed range.
    """

    n = len(dataset)
    if config.target_size < n:
        raise DataError(
            f"target_size {config.target_size} is smaller than the source size {n}"
        )
    if config.target_size == n:
        return dataset

    source = np.column_stack([dataset.features, dataset.targets])
    m = config.target_size - n
    rng = derive_rng(config.seed, stream)
    picks = rng.integers(0, n, size=m)
    noise = rng.standard_normal((m, source.shape[1]))
    synthetic = source[picks] + noise * (config.noise_scale * _column_std(source))
    if config.clamp:
        synthetic = np.clip(synthetic, source.min(axis=0), source.max(axis=0))

    combined = np.vstack([source, synthetic])
    return Dataset(combined[:, :-1], combined[:, -1], dataset.feature_names, dataset.scaled)


def sine_demo(
    n_original: int,
    n_synthetic: int,
    noise_sd: float,
    seed: int,
    *,
    original_noise_sd: float | None = None,
) -> tuple[list[tuple[float, float]], list[tuple[float, float]]]:
    """Noisy samples of ``sin(x)`` over [0, 2*pi] and jittered resamples of them.

    Originals sit on an even grid with noise of ``original_noise_sd`` (half of
    ``noise_sd`` unless given). Synthetic points copy a uniformly drawn
    original's ``x`` and add Gaussian noise of ``noise_sd`` to its ``y``.
    """

    if n_original < 1 or n_synthetic < 1:
        raise DataError("sine demo needs at least one original and one synthetic point")
    if noise_sd < 0.0:
        raise DataError("noise_sd must be non-negative")
    base_sd = noise_sd / 2.0 if original_noise_sd is None else original_noise_sd
    if base_sd < 0.0:
        raise DataError("original_noise_sd must be non-negative")

    rng = derive_rng(seed, "sine")
    x = np.linspace(0.0, 2.0 * math.pi, n_original)
    y = np.sin(x) + rng.standard_normal(n_original) * base_sd
    picks = rng.integers(0, n_original, size=n_synthetic)
    ys = y[picks] + rng.standard_normal(n_synthetic) * noise_sd

    original = [(float(a), float(b)) for a, b in zip(x, y)]
    synthetic = [(float(x[i]), float(b)) for i, b in zip(picks, ys)]
    return original, synthetic


def _write_points(path: Path, points: list[tuple[float, float]]) -> None:
    lines = ["x,y", *(f"{x!r},{y!r}" for x, y in points)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def export_sine_demo(
    original: list[tuple[float, float]],
    synthetic: list[tuple[float, float]],
    out_dir: str | Path,
    prefix: str = "",
) -> tuple[Path, Path]:
    """Write ``<prefix>original.csv`` and ``<prefix>synthetic.csv`` (columns x,y)."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    original_path = out / f"{prefix}original.csv"
    synthetic_path = out / f"{prefix}synthetic.csv"
    _write_points(original_path, original)
    _write_points(synthetic_path, synthetic)
    return original_path, synthetic_path
