from __future__ import annotations

import numpy as np
import pytest

from neurosym import mse, r2
from neurosym.errors import MetricError
from neurosym.metrics import ModelReport, evaluate


def test_mse_examples() -> None:
    assert mse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert mse([0.0], [2.0]) == 4.0
    assert mse([1.0, 2.0, 3.0], [1.0, 3.0, 5.0]) == pytest.approx(5.0 / 3.0)


def test_r2_examples() -> None:
    y = np.array([1.55, 3.2, 3.31, 3.52])

    assert r2(y, y) == 1.0
    assert r2(y, np.full_like(y, y.mean())) == 0.0
    assert r2([0.0, 1.0], [1.0, 0.0]) == pytest.approx(-3.0)


def test_r2_rejects_constant_targets() -> None:
    with pytest.raises(MetricError, match="constant"):
        r2([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_metrics_reject_bad_lengths() -> None:
    with pytest.raises(MetricError):
        mse([], [])
    with pytest.raises(MetricError):
        mse([1.0, 2.0], [1.0])
    with pytest.raises(MetricError):
        r2([1.0], [1.0])


def test_metric_identities_on_random_data() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        y = rng.normal(3.0, 1.0, size=n)
        pred = y + rng.normal(scale=0.3, size=n)

        assert mse(y, y) == 0.0
        assert r2(y, y) == 1.0
        assert r2(y, pred) <= 1.0
        # Shifting both arrays leaves both metrics unchanged.
        assert mse(y + 5.0, pred + 5.0) == pytest.approx(mse(y, pred), rel=1e-9, abs=1e-12)
        assert r2(y + 5.0, pred + 5.0) == pytest.approx(r2(y, pred), rel=1e-9, abs=1e-9)
        # Scaling both by c scales MSE by c^2 and leaves R^2 alone.
        assert mse(2.0 * y, 2.0 * pred) == pytest.approx(4.0 * mse(y, pred), rel=1e-12)
        assert r2(2.0 * y, 2.0 * pred) == pytest.approx(r2(y, pred), rel=1e-12, abs=1e-12)


def test_r2_matches_variance_form() -> None:
    rng = np.random.default_rng(1)
    y = rng.normal(size=50)
    pred = y + rng.normal(scale=0.5, size=50)

    assert r2(y, pred) == pytest.approx(1.0 - mse(y, pred) / np.var(y))


def test_report_row_and_evaluate() -> None:
    report = evaluate([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], [0.0, 1.0], [1.0, 0.0])

    assert report == ModelReport(0.0, 1.0, 1.0, -3.0)
    assert report.as_row("simple_ann") == "simple_ann,0.0,1.0,1.0,-3.0"
