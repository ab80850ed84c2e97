"""Experimental dataset ingestion, standardization and train/validation splits.

The dataset is the four FDM process parameters (infill, layer height, print
speed, extrusion temperature) plus the measured impact strength. Records are
read from CSV, range checked, and held as 64-bit numpy arrays. Standardization
z-scores the four features only; the target stays in kJ/m^2 so reported MSE
keeps physical units.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import DataError
from .rng import derive_rng

FEATURE_NAMES: tuple[str, ...] = (
    "infill_pct",
    "layer_height_mm",
    "print_speed_mm_s",
    "extrusion_temp_c",
)
TARGET_NAME = "impact_strength_kj_m2"
HEADER: tuple[str, ...] = (*FEATURE_NAMES, TARGET_NAME)

# (low, high, low_inclusive, high_inclusive) per column, in native units.
COLUMN_RANGES: dict[str, tuple[float, float, bool, bool]] = {
    "infill_pct": (0.0, 100.0, False, True),
    "layer_height_mm": (0.0, 0.5, False, True),
    "print_speed_mm_s": (0.0, 120.0, False, True),
    "extrusion_temp_c": (150.0, 260.0, True, True),
    "impact_strength_kj_m2": (0.0, 20.0, False, False),
}

BUNDLED_DATASET = "fdm_impact.csv"


@dataclass(frozen=True)
class ExperimentRecord:
    """One experimental run: four process parameters and the measured result.

    Attributes:
        infill_pct: Infill percentage, (0, 100].
        layer_height: Layer height in millimeters, (0, 0.5].
        print_speed: Print speed in millimeters per second, (0, 120].
        extrusion_temp: Extrusion temperature in degrees Celsius, [150, 260].
        impact_strength: Impact strength in kJ/m^2, (0, 20).
    """

    infill_pct: float
    layer_height: float
    print_speed: float
    extrusion_temp: float
    impact_strength: float

    @property
    def features(self) -> tuple[float, float, float, float]:
        return (self.infill_pct, self.layer_height, self.print_speed, self.extrusion_temp)


@dataclass(frozen=True)
class Dataset:
    """An ordered table of records held as arrays.

    Attributes:
        features: ``n x 4`` float64 matrix in :data:`FEATURE_NAMES` order.
        targets: Length ``n`` float64 vector of impact strengths (kJ/m^2).
        feature_names: Column labels for ``features``.
        scaled: True when ``features`` are z-scores rather than native units;
            range invariants only apply to unscaled datasets.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...] = FEATURE_NAMES
    scaled: bool = False

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.float64).reshape(-1)
        if features.ndim != 2 or features.shape[1] != len(FEATURE_NAMES):
            raise DataError(
                f"expected an n x {len(FEATURE_NAMES)} feature matrix, got shape {features.shape}"
            )
        if features.shape[0] != targets.shape[0]:
            raise DataError(
                f"{features.shape[0]} feature rows but {targets.shape[0]} targets"
            )
        if features.shape[0] == 0:
            raise DataError("dataset has no records")
        if len(self.feature_names) != len(FEATURE_NAMES):
            raise DataError("feature count must be exactly 4")
        features.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)

    def __len__(self) -> int:
        return int(self.targets.shape[0])

    @property
    def records(self) -> list[ExperimentRecord]:
        return [
            ExperimentRecord(*(float(v) for v in row), float(y))
            for row, y in zip(self.features, self.targets)
        ]

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        """Return the rows at ``indices`` (in the given order)."""

        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.targets[idx], self.feature_names, self.scaled)

    def concat(self, other: "Dataset") -> "Dataset":
        if self.scaled != other.scaled:
            raise DataError("cannot concatenate scaled and unscaled datasets")
        return Dataset(
            np.vstack([self.features, other.features]),
            np.concatenate([self.targets, other.targets]),
            self.feature_names,
            self.scaled,
        )


@dataclass(frozen=True)
class ScalerStats:
    """Per-feature z-score statistics in native units."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        std = np.asarray(self.std, dtype=np.float64).reshape(-1)
        if mean.shape != std.shape:
            raise DataError("scaler mean and std lengths differ")
        if not np.all(np.isfinite(std)) or np.any(std <= 0.0):
            raise DataError("scaler std components must be finite and strictly positive")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def inverse(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict[str, Any]:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "ScalerStats":
        return cls(np.array(obj["mean"], dtype=np.float64), np.array(obj["std"], dtype=np.float64))


@dataclass(frozen=True)
class TrainValSplit:
    """Disjoint train/validation index lists covering a dataset exactly once."""

    train_indices: tuple[int, ...]
    val_indices: tuple[int, ...]
    seed: int
    n: int = field(default=0)

    def __post_init__(self) -> None:
        n = self.n or len(self.train_indices) + len(self.val_indices)
        object.__setattr__(self, "n", n)
        combined = sorted((*self.train_indices, *self.val_indices))
        if combined != list(range(n)):
            raise DataError("split indices must partition 0..n-1 exactly once")


# -------------------------------------------------------------------
# Parsing / serialization
# -------------------------------------------------------------------
def _check_range(value: float, column: str, row: int) -> None:
    if not math.isfinite(value):
        raise DataError(f"non-finite value {value!r}", row=row, column=column)
    low, high, low_inc, high_inc = COLUMN_RANGES[column]
    ok_low = value >= low if low_inc else value > low
    ok_high = value <= high if high_inc else value < high
    if not (ok_low and ok_high):
        lb = "[" if low_inc else "("
        rb = "]" if high_inc else ")"
        raise DataError(
            f"value {value!r} outside {lb}{low:g}, {high:g}{rb}", row=row, column=column
        )


def _width_error(row: list[str], columns: Sequence[str], row_no: int) -> DataError:
    got, width = len(row), len(columns)
    if got < width:
        return DataError(
            f"missing value (expected {width} columns, got {got})",
            row=row_no,
            column=columns[got],
        )
    return DataError(
        f"unexpected extra value (expected {width} columns, got {got})",
        row=row_no,
        column=f"#{width + 1}",
    )


def _read_rows(csv_text: str) -> tuple[list[str], list[list[str]]]:
    text = csv_text.lstrip("\ufeff")
    reader = csv.reader(io.StringIO(text, newline=""))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError("missing header row")
    header = [cell.strip() for cell in rows[0]]
    return header, rows[1:]


def parse_dataset(csv_text: str) -> Dataset:
    """Parse an experiment CSV into a :class:`Dataset`.

    The header must be exactly :data:`HEADER`. Every body row must carry five
    finite numbers inside :data:`COLUMN_RANGES`. Errors name the offending
    1-based body row and column.
    """

    header, body = _read_rows(csv_text)
    if tuple(header) != HEADER:
        raise DataError(f"header must be {','.join(HEADER)!r}, got {','.join(header)!r}")
    if not body:
        raise DataError("empty body")

    values = np.empty((len(body), len(HEADER)), dtype=np.float64)
    for i, row in enumerate(body, start=1):
        if len(row) != len(HEADER):
            raise _width_error(row, HEADER, i)
        for j, (cell, column) in enumerate(zip(row, HEADER)):
            try:
                value = float(cell.strip())
            except ValueError:
                raise DataError(f"malformed number {cell!r}", row=i, column=column) from None
            _check_range(value, column, i)
            values[i - 1, j] = value
    return Dataset(values[:, :4], values[:, 4])


def parse_inputs(csv_text: str) -> np.ndarray:
    """Parse process parameters for scoring; a trailing target column is ignored."""

    header, body = _read_rows(csv_text)
    if tuple(header) not in (FEATURE_NAMES, HEADER):
        raise DataError(f"header must start with {','.join(FEATURE_NAMES)!r}")
    if not body:
        raise DataError("empty body")
    width = len(header)
    out = np.empty((len(body), len(FEATURE_NAMES)), dtype=np.float64)
    for i, row in enumerate(body, start=1):
        if len(row) != width:
            raise _width_error(row, header, i)
        for j, column in enumerate(FEATURE_NAMES):
            try:
                value = float(row[j].strip())
            except ValueError:
                raise DataError(f"malformed number {row[j]!r}", row=i, column=column) from None
            _check_range(value, column, i)
            out[i - 1, j] = value
    return out


def format_float(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""

    return repr(float(value))


def serialize_dataset(dataset: Dataset) -> str:
    lines = [",".join(HEADER)]
    for row, y in zip(dataset.features, dataset.targets):
        lines.append(",".join(format_float(v) for v in (*row, y)))
    return "\n".join(lines) + "\n"


def dataset_hash(dataset: Dataset) -> str:
    return hashlib.sha256(serialize_dataset(dataset).encode("utf-8")).hexdigest()


def load_dataset(path: str | Path | None = None) -> Dataset:
    """Read a dataset file; ``None`` loads the bundled 31-run experimental table."""

    if path is None:
        resource = resources.files("neurosym").joinpath("datasets", BUNDLED_DATASET)
        return parse_dataset(resource.read_text(encoding="utf-8"))
    return parse_dataset(Path(path).read_text(encoding="utf-8"))


# -------------------------------------------------------------------
# Standardization / splitting
# -------------------------------------------------------------------
def fit_scaler(features: np.ndarray) -> ScalerStats:
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] < 2:
        raise DataError("standardization needs at least 2 records")
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    for j, s in enumerate(std):
        if not s > 0.0:
            raise DataError("zero-variance feature column", column=FEATURE_NAMES[j])
    return ScalerStats(mean, std)


def standardize(dataset: Dataset) -> tuple[Dataset, ScalerStats]:
    """Z-score the four features with sample statistics; targets pass through."""

    stats = fit_scaler(dataset.features)
    scaled = Dataset(
        stats.transform(dataset.features), dataset.targets, dataset.feature_names, True
    )
    return scaled, stats


def split(dataset: Dataset | int, train_fraction: float, seed: int) -> TrainValSplit:
    """Seeded random partition into ``round(n * fraction)`` train rows and the rest.

    Rounding is half-up. Index lists are returned in ascending order.
    """

    n = dataset if isinstance(dataset, int) else len(dataset)
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = int(math.floor(n * train_fraction + 0.5))
    n_val = n - n_train
    if n_train < 2 or n_val < 1:
        raise DataError(
            f"degenerate split of {n} records: {n_train} train / {n_val} validation"
        )
    perm = derive_rng(seed, "split").permutation(n)
    train = tuple(int(i) for i in np.sort(perm[:n_train]))
    val = tuple(int(i) for i in np.sort(perm[n_train:]))
    return TrainValSplit(train, val, seed, n)
