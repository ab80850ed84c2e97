from __future__ import annotations

import math
from pathlib import Path

import numpy as np
import pytest

from neurosym import AugmentConfig, augment_tabular, load_dataset, sine_demo
from neurosym.augment import export_sine_demo
from neurosym.data import serialize_dataset
from neurosym.errors import DataError


def _source_matrix(ds) -> np.ndarray:
    return np.column_stack([ds.features, ds.targets])


def test_target_equal_to_source_is_identity() -> None:
    ds = load_dataset()
    out = augment_tabular(ds, AugmentConfig(target_size=len(ds), seed=1))

    assert serialize_dataset(out) == serialize_dataset(ds)


def test_target_below_source_is_rejected() -> None:
    with pytest.raises(DataError):
        augment_tabular(load_dataset(), AugmentConfig(target_size=10))


def test_zero_noise_duplicates_originals() -> None:
    ds = load_dataset()
    n = len(ds)
    out = augment_tabular(ds, AugmentConfig(target_size=2 * n, noise_scale=0.0, seed=5))

    src = _source_matrix(ds)
    full = _source_matrix(out)
    assert len(out) == 2 * n
    source_rows = {tuple(row) for row in src}
    for row in full[n:]:
        assert tuple(row) in source_rows


def test_originals_are_kept_as_prefix() -> None:
    ds = load_dataset()
    out = augment_tabular(ds, AugmentConfig(target_size=300, noise_scale=0.2, seed=9))

    assert np.array_equal(out.features[: len(ds)], ds.features)
    assert np.array_equal(out.targets[: len(ds)], ds.targets)


def test_clamp_keeps_every_column_in_source_range() -> None:
    ds = load_dataset()
    src = _source_matrix(ds)
    for seed in range(5):
        out = augment_tabular(ds, AugmentConfig(target_size=500, noise_scale=0.5, seed=seed))
        full = _source_matrix(out)
        assert np.all(full >= src.min(axis=0))
        assert np.all(full <= src.max(axis=0))


def test_augmented_means_track_source_means() -> None:
    ds = load_dataset()
    config = AugmentConfig(target_size=1000, noise_scale=0.05, seed=42)
    out = augment_tabular(ds, config)

    src = _source_matrix(ds)
    synthetic = _source_matrix(out)[len(ds) :]
    m = synthetic.shape[0]
    assert len(out) == 1000
    for j in range(src.shape[1]):
        se = src[:, j].std(ddof=1) * math.sqrt(1.0 + config.noise_scale**2) / math.sqrt(m)
        assert abs(synthetic[:, j].mean() - src[:, j].mean()) <= 3.0 * se


def test_augmentation_is_deterministic() -> None:
    ds = load_dataset()
    config = AugmentConfig(target_size=400, seed=11)

    a = serialize_dataset(augment_tabular(ds, config))
    b = serialize_dataset(augment_tabular(ds, config))
    assert a == b


def test_streams_and_seeds_are_independent() -> None:
    ds = load_dataset()
    config = AugmentConfig(target_size=200, seed=11)

    base = augment_tabular(ds, config)
    other_stream = augment_tabular(ds, config, stream="augment-train")
    other_seed = augment_tabular(ds, config.model_copy(update={"seed": 12}))
    assert not np.array_equal(base.targets, other_stream.targets)
    assert not np.array_equal(base.targets, other_seed.targets)


def test_sine_demo_without_noise_is_exact() -> None:
    original, synthetic = sine_demo(40, 200, 0.0, seed=0)

    for x, y in original + synthetic:
        assert y == pytest.approx(math.sin(x), abs=1e-12)


def test_sine_demo_single_original() -> None:
    original, synthetic = sine_demo(1, 50, 0.1, seed=3)

    assert len(original) == 1
    assert all(x == original[0][0] for x, _ in synthetic)


def test_sine_demo_synthetic_points_stay_near_curve() -> None:
    original, synthetic = sine_demo(40, 500, 0.1, seed=0)

    assert len(original) == 40
    assert len(synthetic) == 500
    near = sum(1 for x, y in synthetic if abs(y - math.sin(x)) <= 0.4)
    assert near / len(synthetic) >= 0.99


def test_sine_demo_grid_spans_full_period() -> None:
    original, _ = sine_demo(40, 10, 0.1, seed=0)
    xs = [x for x, _ in original]

    assert xs[0] == 0.0
    assert xs[-1] == pytest.approx(2.0 * math.pi)
    assert xs == sorted(xs)


def test_export_sine_demo_writes_point_files(tmp_path: Path) -> None:
    original, synthetic = sine_demo(40, 500, 0.1, seed=0)
    orig_path, syn_path = export_sine_demo(original, synthetic, tmp_path, prefix="sine_demo_")

    assert orig_path.name == "sine_demo_original.csv"
    orig_lines = orig_path.read_text(encoding="utf-8").splitlines()
    syn_lines = syn_path.read_text(encoding="utf-8").splitlines()
    assert orig_lines[0] == "x,y"
    assert len(orig_lines) == 41
    assert len(syn_lines) == 501
