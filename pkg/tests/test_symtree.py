from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from neurosym import TreeConfig, export_rules, fit_tree, predict_tree
from neurosym.errors import ModelFormatError, NeurosymError
from neurosym.symtree import (
    TIE_TOLERANCE,
    Leaf,
    RegressionTree,
    Split,
    feature_usage,
    iter_nodes,
    leaf_count,
    load_tree,
    parse_rules,
    predict_many,
    save_tree,
    tree_depth,
)


def _sse(y: np.ndarray, pred: np.ndarray) -> float:
    d = y - pred
    return float(np.dot(d, d))


# -------------------------------------------------------------------
# Brute-force oracle: score every (feature, threshold) with direct sums
# -------------------------------------------------------------------
def _oracle_leaves(
    X: np.ndarray, y: np.ndarray, idx: list[int], depth: int, max_depth: int
) -> list[list[int]]:
    ys = [float(y[i]) for i in idx]
    if depth >= max_depth or len(idx) < 2 or max(ys) == min(ys):
        return [idx]

    node_mean = sum(ys) / len(ys)
    node_sse = sum((v - node_mean) ** 2 for v in ys)
    tol = TIE_TOLERANCE * max(node_sse, 1.0)

    candidates: list[tuple[int, float, float]] = []
    for f in range(X.shape[1]):
        values = sorted({float(X[i, f]) for i in idx})
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2.0
            left = [float(y[i]) for i in idx if X[i, f] <= thr]
            right = [float(y[i]) for i in idx if X[i, f] > thr]
            score = 0.0
            for part in (left, right):
                m = sum(part) / len(part)
                score += sum((v - m) ** 2 for v in part)
            candidates.append((f, thr, score))
    if not candidates:
        return [idx]

    lowest = min(score for _, _, score in candidates)
    f, thr, _ = next(c for c in candidates if c[2] <= lowest + tol)
    left_idx = [i for i in idx if X[i, f] <= thr]
    right_idx = [i for i in idx if X[i, f] > thr]
    return _oracle_leaves(X, y, left_idx, depth + 1, max_depth) + _oracle_leaves(
        X, y, right_idx, depth + 1, max_depth
    )


def _oracle_predictions(X: np.ndarray, y: np.ndarray, max_depth: int) -> np.ndarray:
    pred = np.empty_like(y)
    for group in _oracle_leaves(X, y, list(range(y.shape[0])), 0, max_depth):
        ys = y[np.array(group)]
        pred[group] = ys[0] if ys.max() == ys.min() else np.mean(ys)
    return pred


def _random_tree(rng: np.random.Generator, depth: int, n_features: int) -> RegressionTree:
    def build(d: int) -> tuple[object, int]:
        if d == depth or rng.random() < 0.3:
            n = int(rng.integers(1, 50))
            return Leaf(float(rng.normal(3.0, 1.0)), n), n
        left, nl = build(d + 1)
        right, nr = build(d + 1)
        thr = float(rng.normal()) * 10.0 ** int(rng.integers(-3, 3))
        return Split(int(rng.integers(0, n_features)), thr, left, right, nl + nr), nl + nr

    root, _ = build(0)
    return RegressionTree(root, n_features)


# -------------------------------------------------------------------
# Fitting
# -------------------------------------------------------------------
@pytest.mark.parametrize("value", [3.3, 1.55, 0.1, 3.52])
@pytest.mark.parametrize("n", [3, 20, 800])
def test_constant_targets_give_single_leaf(value: float, n: int) -> None:
    X = np.random.default_rng(0).normal(size=(n, 3))
    tree = fit_tree(X, np.full(n, value))

    assert isinstance(tree.root, Leaf)
    assert tree.root.value == value
    assert tree.root.n_samples == n


def test_pure_children_keep_exact_targets() -> None:
    X = np.arange(30, dtype=np.float64).reshape(-1, 1)
    y = np.where(X[:, 0] < 10, 1.55, 3.3)
    tree = fit_tree(X, y, TreeConfig(max_depth=1))

    assert isinstance(tree.root, Split)
    assert tree.root.left == Leaf(1.55, 10)
    assert tree.root.right == Leaf(3.3, 20)


def test_step_data_splits_at_midpoint() -> None:
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    tree = fit_tree(X, y)

    assert isinstance(tree.root, Split)
    assert tree.root.feature == 0
    assert tree.root.threshold == 1.5
    assert tree.root.left == Leaf(1.0, 2)
    assert tree.root.right == Leaf(5.0, 2)
    assert tree_depth(tree) == 1
    assert _sse(y, predict_many(tree, X)) == 0.0
    assert predict_tree(tree, np.array([0.7])) == 1.0
    assert predict_tree(tree, np.array([1.5])) == 1.0
    assert predict_tree(tree, np.array([1.6])) == 5.0


def test_ties_prefer_lowest_feature() -> None:
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
    y = np.array([1.0, 1.0, 5.0, 5.0])
    tree = fit_tree(X, y)

    assert isinstance(tree.root, Split)
    assert tree.root.feature == 0


def test_fit_matches_brute_force_oracle() -> None:
    rng = np.random.default_rng(12345)
    for trial in range(1200):
        n = int(rng.integers(1, 11))
        X = rng.integers(0, 5, size=(n, 2)).astype(np.float64)
        if trial % 2:
            y = np.round(rng.normal(3.0, 1.0, size=n), 2)
        else:
            y = rng.integers(0, 4, size=n).astype(np.float64)
        max_depth = int(rng.integers(0, 3))

        tree = fit_tree(X, y, TreeConfig(max_depth=max_depth))
        pred = predict_many(tree, X)
        expected = _oracle_predictions(X, y, max_depth)
        assert np.array_equal(pred, expected), (trial, X.tolist(), y.tolist(), max_depth)
        assert _sse(y, pred) == _sse(y, expected)


def test_depth_bound_and_leaf_count() -> None:
    rng = np.random.default_rng(1)
    X = rng.normal(size=(300, 16))
    y = rng.normal(size=300)
    tree = fit_tree(X, y, TreeConfig(max_depth=4))

    assert tree_depth(tree) <= 4
    assert leaf_count(tree) <= 16
    assert len(set(predict_many(tree, X).tolist())) <= 16


def test_leaf_values_are_means_of_routed_targets() -> None:
    rng = np.random.default_rng(2)
    X = rng.normal(size=(200, 5))
    y = rng.normal(size=200) + X[:, 0]
    tree = fit_tree(X, y)

    routed: dict[int, list[float]] = {}
    leaves: dict[int, Leaf] = {}
    for row, target in zip(X, y):
        node = tree.root
        while isinstance(node, Split):
            node = node.left if row[node.feature] <= node.threshold else node.right
        routed.setdefault(id(node), []).append(float(target))
        leaves[id(node)] = node
    for key, targets in routed.items():
        assert leaves[key].value == pytest.approx(np.mean(targets), abs=1e-12)
        assert leaves[key].n_samples == len(targets)


def test_sse_never_increases_with_depth() -> None:
    rng = np.random.default_rng(3)
    X = rng.normal(size=(150, 4))
    y = np.sin(X[:, 0]) + 0.1 * rng.normal(size=150)

    baseline = _sse(y, np.full_like(y, y.mean()))
    previous = baseline
    for depth in range(0, 6):
        sse = _sse(y, predict_many(fit_tree(X, y, TreeConfig(max_depth=depth)), X))
        assert sse <= previous + 1e-9
        assert sse <= baseline + 1e-9
        previous = sse


def test_min_samples_leaf_is_respected() -> None:
    rng = np.random.default_rng(4)
    X = rng.normal(size=(60, 3))
    y = rng.normal(size=60)
    tree = fit_tree(X, y, TreeConfig(max_depth=6, min_samples_leaf=5))

    for node, _ in iter_nodes(tree):
        if isinstance(node, Leaf):
            assert node.n_samples >= 5


def test_identical_rows_cannot_split() -> None:
    X = np.ones((5, 2))
    tree = fit_tree(X, np.arange(5.0))

    assert isinstance(tree.root, Leaf)
    assert tree.root.value == 2.0


def test_fit_rejects_bad_input() -> None:
    with pytest.raises(NeurosymError):
        fit_tree(np.empty((0, 2)), np.empty(0))
    with pytest.raises(NeurosymError):
        fit_tree(np.ones((3, 2)), np.ones(4))


def test_single_leaf_predicts_constant() -> None:
    tree = RegressionTree(Leaf(3.3, 31), 16)
    rows = np.random.default_rng(5).normal(size=(10, 16))

    assert all(predict_tree(tree, r) == 3.3 for r in rows)


def test_feature_usage_counts_splits() -> None:
    tree = RegressionTree(
        Split(2, 0.5, Split(2, 0.1, Leaf(1.0, 1), Leaf(2.0, 1), 2), Leaf(3.0, 1), 3), 4
    )
    assert feature_usage(tree) == {2: 2}


# -------------------------------------------------------------------
# Rules text
# -------------------------------------------------------------------
def test_single_leaf_rules() -> None:
    assert export_rules(RegressionTree(Leaf(3.3, 31), 16)) == "predict 3.30 (n=31)\n"


def test_depth_one_rules_have_three_lines() -> None:
    tree = RegressionTree(Split(3, 0.4125, Leaf(1.57, 2), Leaf(3.3123, 29), 31), 16)
    lines = export_rules(tree).splitlines()

    assert lines == [
        "if f3 <= 0.4125",
        "  then predict 1.57 (n=2)",
        "  else predict 3.31 (n=29)",
    ]


def test_rules_round_trip_is_byte_identical() -> None:
    rng = np.random.default_rng(6)
    for _ in range(300):
        tree = _random_tree(rng, int(rng.integers(0, 5)), 16)
        text = export_rules(tree)
        assert export_rules(parse_rules(text)) == text


def test_rules_round_trip_keeps_structure() -> None:
    rng = np.random.default_rng(7)
    X = rng.normal(size=(80, 16))
    y = rng.normal(size=80)
    tree = fit_tree(X, y)
    parsed = parse_rules(export_rules(tree, decimals=None))

    for (a, da), (b, db) in zip(iter_nodes(tree), iter_nodes(parsed)):
        assert da == db
        assert type(a) is type(b)
        if isinstance(a, Split):
            assert (a.feature, a.threshold) == (b.feature, b.threshold)
    assert np.array_equal(predict_many(parsed, X), predict_many(tree, X))


def test_rounded_rules_predict_rounded_leaf_values() -> None:
    tree = RegressionTree(Split(0, 0.5, Leaf(1.5678, 3), Leaf(3.3123, 5), 8), 1)
    parsed = parse_rules(export_rules(tree), n_features=1)

    assert predict_tree(parsed, np.array([0.0])) == 1.57
    assert predict_tree(parsed, np.array([1.0])) == 3.31
    exact = parse_rules(export_rules(tree, decimals=None), n_features=1)
    assert predict_tree(exact, np.array([0.0])) == 1.5678


def test_parse_rules_rejects_malformed_text() -> None:
    with pytest.raises(ModelFormatError):
        parse_rules("if f0 <= 1.0\n  then predict 1.00 (n=1)\n")
    with pytest.raises(ModelFormatError):
        parse_rules("predict one (n=1)\n")
    with pytest.raises(ModelFormatError):
        parse_rules("predict 1.00 (n=1)\npredict 2.00 (n=1)\n")


# -------------------------------------------------------------------
# Persistence
# -------------------------------------------------------------------
def test_save_load_tree(tmp_path: Path) -> None:
    rng = np.random.default_rng(8)
    X = rng.normal(size=(100, 16))
    y = rng.normal(size=100)
    tree = fit_tree(X, y, TreeConfig(max_depth=3))

    loaded = load_tree(save_tree(tmp_path / "tree.json", tree))
    assert loaded == tree
    assert np.array_equal(predict_many(loaded, X), predict_many(tree, X))


def test_load_tree_rejects_foreign_json(tmp_path: Path) -> None:
    path = tmp_path / "tree.json"
    path.write_text('{"format": "other", "version": 1}', encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_tree(path)

    path.write_text("not json", encoding="utf-8")
    with pytest.raises(ModelFormatError):
        load_tree(path)
