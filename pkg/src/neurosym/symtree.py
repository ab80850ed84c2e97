"""The symbolic component: a greedy CART regression tree over learned features.

Each node picks the (feature, threshold) pair minimizing the summed squared
error of its two children. Candidate thresholds are midpoints between
consecutive distinct sorted values; samples with ``value <= threshold`` go
left. Ties are broken by lowest feature index, then lowest threshold. Growth
stops at ``max_depth``, on pure nodes, or when min-sample limits leave no
valid split. Leaves predict the mean of the training targets routed to them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import ModelFormatError, NeurosymError

# Split scores closer than this (relative to the node's SSE) count as tied.
TIE_TOLERANCE = 1e-12


class TreeConfig(BaseModel):
    """Growth limits. ``max_depth`` defaults to 4 edges from root to leaf."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    max_depth: int = Field(4, ge=0)
    min_samples_leaf: int = Field(1, ge=1)
    min_samples_split: int = Field(2, ge=2)


@dataclass(frozen=True)
class Leaf:
    value: float
    n_samples: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Node"
    right: "Node"
    n_samples: int


Node = Union[Leaf, Split]


@dataclass(frozen=True)
class RegressionTree:
    """A fitted tree.

    Attributes:
        root: Root node.
        n_features: Width of the feature rows the tree was fit on.
        config: Growth limits used for fitting.
    """

    root: Node
    n_features: int
    config: TreeConfig = field(default_factory=TreeConfig)


# -------------------------------------------------------------------
# Fitting
# -------------------------------------------------------------------
def _node_sse(y: np.ndarray) -> float:
    d = y - y.mean()
    return float(np.dot(d, d))


def _best_split(
    X: np.ndarray, y: np.ndarray, config: TreeConfig
) -> tuple[int, float, float] | None:
    """Best ``(feature, threshold, children_sse)`` for one node, or None."""

    n = y.shape[0]
    tol = TIE_TOLERANCE * max(_node_sse(y), 1.0)
    sizes_left = np.arange(1, n, dtype=np.float64)
    sizes_right = n - sizes_left
    min_leaf = config.min_samples_leaf
    size_ok = (sizes_left >= min_leaf) & (sizes_right >= min_leaf)

    best: tuple[int, float, float] | None = None
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        xs = X[order, feature]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total, total_sq = csum[-1], csq[-1]

        left_sum, left_sq = csum[:-1], csq[:-1]
        right_sum, right_sq = total - left_sum, total_sq - left_sq
        scores = (left_sq - left_sum * left_sum / sizes_left) + (
            right_sq - right_sum * right_sum / sizes_right
        )
        valid = size_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        scores = np.where(valid, np.maximum(scores, 0.0), np.inf)
        lowest = scores.min()
        # Lowest threshold among the (near-)tied minima.
        pos = int(np.flatnonzero(scores <= lowest + tol)[0])
        score = float(scores[pos])
        if best is None or score < best[2] - tol:
            threshold = (xs[pos] + xs[pos + 1]) / 2.0
            if threshold >= xs[pos + 1]:
                threshold = xs[pos]
            best = (feature, float(threshold), score)
    return best


def _grow(
    X: np.ndarray, y: np.ndarray, idx: np.ndarray, depth: int, config: TreeConfig
) -> Node:
    ys = y[idx]
    # A pure node keeps its target exactly; np.mean can drift by an ulp.
    pure = float(ys.max()) == float(ys.min())
    leaf = Leaf(float(ys[0]) if pure else float(np.mean(ys)), int(idx.shape[0]))
    if depth >= config.max_depth or idx.shape[0] < config.min_samples_split or pure:
        return leaf

    found = _best_split(X[idx], ys, config)
    if found is None:
        return leaf
    feature, threshold, _ = found
    go_left = X[idx, feature] <= threshold
    return Split(
        feature,
        threshold,
        _grow(X, y, idx[go_left], depth + 1, config),
        _grow(X, y, idx[~go_left], depth + 1, config),
        int(idx.shape[0]),
    )


def fit_tree(
    features: np.ndarray, targets: np.ndarray, config: TreeConfig | None = None
) -> RegressionTree:
    """Greedy top-down CART fit of ``targets`` on ``features``."""

    config = config or TreeConfig()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape[0] == 0:
        raise NeurosymError("cannot fit a tree on empty input")
    if X.shape[0] != y.shape[0]:
        raise NeurosymError(f"{X.shape[0]} feature rows but {y.shape[0]} targets")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise NeurosymError("tree inputs must be finite")
    root = _grow(X, y, np.arange(y.shape[0]), 0, config)
    return RegressionTree(root, int(X.shape[1]), config)


# -------------------------------------------------------------------
# Prediction and structure
# -------------------------------------------------------------------
def predict_tree(tree: RegressionTree, feature_row: np.ndarray) -> float:
    node = tree.root
    while isinstance(node, Split):
        node = node.left if feature_row[node.feature] <= node.threshold else node.right
    return node.value


def predict_many(tree: RegressionTree, features: np.ndarray) -> np.ndarray:
    F = np.atleast_2d(np.asarray(features, dtype=np.float64))
    return np.array([predict_tree(tree, row) for row in F], dtype=np.float64)


def iter_nodes(tree: RegressionTree) -> Iterator[tuple[Node, int]]:
    """Pre-order walk yielding ``(node, depth)``."""

    stack: list[tuple[Node, int]] = [(tree.root, 0)]
    while stack:
        node, depth = stack.pop()
        yield node, depth
        if isinstance(node, Split):
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


def tree_depth(tree: RegressionTree) -> int:
    return max(depth for node, depth in iter_nodes(tree) if isinstance(node, Leaf))


def leaf_count(tree: RegressionTree) -> int:
    return sum(1 for node, _ in iter_nodes(tree) if isinstance(node, Leaf))


def feature_usage(tree: RegressionTree) -> dict[int, int]:
    """How many splits consult each learned feature, by feature index."""

    usage: dict[int, int] = {}
    for node, _ in iter_nodes(tree):
        if isinstance(node, Split):
            usage[node.feature] = usage.get(node.feature, 0) + 1
    return dict(sorted(usage.items()))


# -------------------------------------------------------------------
# Human-readable rules
# -------------------------------------------------------------------
_INDENT = "  "
_LEAF_RE = re.compile(r"^predict (\S+) \(n=(\d+)\)$")
_SPLIT_RE = re.compile(r"^if f(\d+) <= (\S+)$")


def _rule_lines(node: Node, depth: int, branch: str, decimals: int | None) -> Iterator[str]:
    prefix = _INDENT * depth + branch
    if isinstance(node, Leaf):
        value = repr(node.value) if decimals is None else f"{node.value:.{decimals}f}"
        yield f"{prefix}predict {value} (n={node.n_samples})"
        return
    yield f"{prefix}if f{node.feature} <= {node.threshold!r}"
    yield from _rule_lines(node.left, depth + 1, "then ", decimals)
    yield from _rule_lines(node.right, depth + 1, "else ", decimals)


def export_rules(tree: RegressionTree, decimals: int | None = 2) -> str:
    """Indented if/then/else text, one line per node.

    Thresholds are written exactly. Leaf values are rounded to ``decimals``, so
    parsing the text back predicts the rounded values; ``decimals=None`` writes
    leaves exactly and the parsed tree then predicts identically.

    A depth-1 tree reads::

        if f3 <= 0.4125
          then predict 1.57 (n=2)
          else predict 3.31 (n=29)
    """

    return "\n".join(_rule_lines(tree.root, 0, "", decimals)) + "\n"


def parse_rules(
    text: str, n_features: int = 16, config: TreeConfig | None = None
) -> RegressionTree:
    """Rebuild a tree from :func:`export_rules` output."""

    lines = [ln for ln in text.splitlines() if ln.strip()]
    pos = 0

    def parse(depth: int, branch: str) -> Node:
        nonlocal pos
        if pos >= len(lines):
            raise ModelFormatError("rules text ends in the middle of a split")
        line = lines[pos]
        prefix = _INDENT * depth + branch
        if not line.startswith(prefix) or line[len(prefix) : len(prefix) + 1] == " ":
            raise ModelFormatError(f"line {pos + 1}: expected indentation {prefix!r}")
        body = line[len(prefix) :]
        pos += 1
        try:
            if m := _LEAF_RE.match(body):
                return Leaf(float(m.group(1)), int(m.group(2)))
            if m := _SPLIT_RE.match(body):
                feature, threshold = int(m.group(1)), float(m.group(2))
                left = parse(depth + 1, "then ")
                right = parse(depth + 1, "else ")
                n_samples = left.n_samples + right.n_samples
                return Split(feature, threshold, left, right, n_samples)
        except ModelFormatError:
            raise
        except ValueError:
            pass
        raise ModelFormatError(f"line {pos}: cannot parse {body!r}")

    root = parse(0, "")
    if pos != len(lines):
        raise ModelFormatError(f"unexpected text after the tree at line {pos + 1}")
    return RegressionTree(root, n_features, config or TreeConfig())


# -------------------------------------------------------------------
# Persistence: JSON document with a pre-order node list
# -------------------------------------------------------------------
TREE_FORMAT = "neurosym-tree"
TREE_VERSION = 1


def tree_to_dict(tree: RegressionTree) -> dict:
    nodes: list[list] = []
    for node, _ in iter_nodes(tree):
        if isinstance(node, Split):
            nodes.append(["split", node.feature, node.threshold, node.n_samples])
        else:
            nodes.append(["leaf", node.value, node.n_samples])
    return {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "n_features": tree.n_features,
        "config": tree.config.model_dump(),
        "nodes": nodes,
    }


def tree_from_dict(obj: dict) -> RegressionTree:
    if obj.get("format") != TREE_FORMAT or obj.get("version") != TREE_VERSION:
        raise ModelFormatError("not a version 1 neurosym tree document")
    entries = iter(obj["nodes"])

    def build() -> Node:
        try:
            entry = next(entries)
        except StopIteration:
            raise ModelFormatError("tree node list ends early") from None
        if entry[0] == "leaf":
            return Leaf(float(entry[1]), int(entry[2]))
        if entry[0] == "split":
            left = build()
            right = build()
            return Split(int(entry[1]), float(entry[2]), left, right, int(entry[3]))
        raise ModelFormatError(f"unknown node kind {entry[0]!r}")

    try:
        root = build()
        config = TreeConfig.model_validate(obj["config"])
        n_features = int(obj["n_features"])
    except ModelFormatError:
        raise
    except (KeyError, IndexError, TypeError, ValueError) as e:
        raise ModelFormatError(f"bad tree document: {e}") from e
    if next(entries, None) is not None:
        raise ModelFormatError("extra nodes after the tree")
    return RegressionTree(root, n_features, config)


def save_tree(path: str | Path, tree: RegressionTree) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(tree_to_dict(tree), indent=2) + "\n", encoding="utf-8")
    return out


def load_tree(path: str | Path) -> RegressionTree:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"tree file is not valid JSON: {e}") from e
    return tree_from_dict(obj)
