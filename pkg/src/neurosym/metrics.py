"""Regression metrics: mean squared error and coefficient of determination."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import format_float
from .errors import MetricError

REPORT_COLUMNS: tuple[str, ...] = ("algorithm", "mse_train", "mse_val", "r2_train", "r2_val")


def _pair(y_true: np.ndarray, y_pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = np.asarray(y_true, dtype=np.float64).ravel()
    p = np.asarray(y_pred, dtype=np.float64).ravel()
    if t.shape[0] == 0:
        raise MetricError("metrics need at least one sample")
    if t.shape != p.shape:
        raise MetricError(f"length mismatch: {t.shape[0]} true vs {p.shape[0]} predicted")
    return t, p


def mse(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Mean of squared residuals."""

    t, p = _pair(y_true, y_pred)
    resid = t - p
    return float(np.mean(resid * resid))


def r2(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """``1 - SS_res / SS_tot`` with the mean taken over ``y_true`` itself.

    Raises:
        MetricError: for fewer than 2 samples or a constant ``y_true``.
    """

    t, p = _pair(y_true, y_pred)
    if t.shape[0] < 2:
        raise MetricError("R^2 needs at least 2 samples")
    resid = t - p
    dev = t - t.mean()
    ss_res = float(np.dot(resid, resid))
    ss_tot = float(np.dot(dev, dev))
    if ss_tot == 0.0:
        raise MetricError("R^2 is undefined for constant targets")
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class ModelReport:
    """Train/validation MSE (kJ/m^2)^2 and R^2 for one model."""

    mse_train: float
    mse_val: float
    r2_train: float
    r2_val: float

    def as_row(self, algorithm: str) -> str:
        values = (self.mse_train, self.mse_val, self.r2_train, self.r2_val)
        return ",".join([algorithm, *(format_float(v) for v in values)])


def evaluate(
    y_train: np.ndarray,
    pred_train: np.ndarray,
    y_val: np.ndarray,
    pred_val: np.ndarray,
) -> ModelReport:
    return ModelReport(
        mse_train=mse(y_train, pred_train),
        mse_val=mse(y_val, pred_val),
        r2_train=r2(y_train, pred_train),
        r2_val=r2(y_val, pred_val),
    )
