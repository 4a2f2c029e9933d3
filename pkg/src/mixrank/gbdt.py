"""Pointwise gradient-boosted regression trees with logistic loss.

Boosting is second-order: each round fits one depth-limited tree to the
gradient/hessian of the logistic loss at the current margins, choosing
splits by the regularized gain

    1/2 * [ G_L^2/(H_L+lam) + G_R^2/(H_R+lam) - (G_L+G_R)^2/(H_L+H_R+lam) ] - gamma

and storing, per split, the side on which records with a missing feature
travel (whichever side scored the higher gain). Leaf weights are
``-learning_rate * G/(H+lam)``, stored post-shrinkage so that prediction
is a plain sum over trees.

Split search runs in ``exact`` mode (every midpoint between consecutive
distinct sorted values is a candidate) or ``quantile`` mode (a
hessian-weighted quantile subset of those midpoints, ``bins`` per
feature). With ``bins`` at least the number of distinct values the two
modes coincide.

Trained models are immutable and safe for concurrent scoring.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import expit

from . import _kernels
from .core import Dataset, FeatureKey, FeatureVector, TrainingError, format_key, logit, parse_key


@dataclass(frozen=True)
class Leaf:
    weight: float
    ordinal: int


@dataclass(frozen=True)
class Internal:
    feature: FeatureKey
    threshold: float
    default_left: bool
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[Internal, Leaf]


@dataclass(frozen=True)
class GbdtTrainConfig:
    num_trees: int = 100
    max_depth: int = 2
    learning_rate: float = 0.1
    l2_leaf: float = 1.0
    min_split_gain: float = 0.0
    split_mode: str = "exact"
    bins: int = 32
    min_child_hessian: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.num_trees < 1:
            raise ValueError("num_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0, 1]")
        if self.split_mode not in ("exact", "quantile"):
            raise ValueError(f"unknown split_mode {self.split_mode!r}")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.l2_leaf < 0 or self.min_child_hessian < 0:
            raise ValueError("l2_leaf and min_child_hessian must be non-negative")
        if self.l2_leaf + self.min_child_hessian <= 0:
            raise ValueError("l2_leaf and min_child_hessian cannot both be zero")


@dataclass(frozen=True)
class GbdtModel:
    """An ordered forest; prediction is base_score plus a sum of leaf weights."""

    trees: tuple[TreeNode, ...]
    learning_rate: float
    base_score: float
    feature_schema: frozenset[FeatureKey]
    config: GbdtTrainConfig
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_trees(self) -> int:
        return len(self.trees)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(model_to_json(self))

    @classmethod
    def load(cls, path) -> "GbdtModel":
        with open(path, "r", encoding="utf-8") as fh:
            return model_from_json(fh.read())


def _clamped_base_score(y: np.ndarray) -> float:
    p = float(y.mean())
    if p <= 0.0:
        return -10.0
    if p >= 1.0:
        return 10.0
    return min(10.0, max(-10.0, logit(p)))


def _quantile_boundaries(boundaries: np.ndarray, sorted_hess: np.ndarray, bins: int) -> np.ndarray:
    """Hessian-weighted quantile subset of the candidate boundaries.

    Returns all boundaries when they already fit the bin budget, which
    makes quantile mode coincide with exact mode for small cardinality.
    """
    if len(boundaries) <= bins - 1:
        return boundaries
    cum_h = np.cumsum(sorted_hess)
    targets = cum_h[-1] * np.arange(1, bins) / bins
    cum_at_boundary = cum_h[boundaries]
    pos = np.searchsorted(cum_at_boundary, targets)
    pos = np.clip(pos, 0, len(boundaries) - 1)
    return np.unique(boundaries[pos])


class _TreeGrower:
    """Grows one tree over a dense matrix view of the training data."""

    def __init__(self, X: np.ndarray, g: np.ndarray, h: np.ndarray, columns: list[FeatureKey], cfg: GbdtTrainConfig):
        self.X = X
        self.g = g
        self.h = h
        self.columns = columns
        self.cfg = cfg
        self.leaf_count = 0
        self.leaf_values = np.zeros(len(g))  # shrunk weight per training row

    def grow(self) -> TreeNode:
        return self._node(np.arange(self.X.shape[0], dtype=np.intp), depth=0)

    def _node(self, rows: np.ndarray, depth: int) -> TreeNode:
        cfg = self.cfg
        g_sum = float(self.g[rows].sum())
        h_sum = float(self.h[rows].sum())
        if depth >= cfg.max_depth:
            return self._leaf(rows, g_sum, h_sum)

        best_gain = 0.0
        best = None  # (col, threshold, missing_left)
        for col, key in enumerate(self.columns):
            values = self.X[rows, col]
            missing = np.isnan(values)
            present = ~missing
            vals = values[present]
            if len(vals) < 2:
                continue
            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            boundaries = np.nonzero(sv[:-1] != sv[1:])[0]
            if len(boundaries) == 0:
                continue
            present_rows = rows[present][order]
            sg = np.ascontiguousarray(self.g[present_rows])
            sh = np.ascontiguousarray(self.h[present_rows])
            if cfg.split_mode == "quantile":
                boundaries = _quantile_boundaries(boundaries, sh, cfg.bins)
            g_miss = float(self.g[rows[missing]].sum())
            h_miss = float(self.h[rows[missing]].sum())
            gain, b, missing_left = _kernels.scan_split(
                sg, sh, boundaries, g_miss, h_miss,
                cfg.l2_leaf, cfg.min_split_gain, cfg.min_child_hessian,
            )
            if gain > best_gain:
                best_gain = gain
                best = (col, key, (sv[b] + sv[b + 1]) / 2.0, bool(missing_left))

        if best is None:
            return self._leaf(rows, g_sum, h_sum)

        col, key, threshold, missing_left = best
        values = self.X[rows, col]
        missing = np.isnan(values)
        go_left = (values <= threshold) & ~missing
        if missing_left:
            go_left |= missing
        left_rows = rows[go_left]
        right_rows = rows[~go_left]
        if len(left_rows) == 0 or len(right_rows) == 0:
            # Midpoint rounded onto a data value (adjacent floats); no
            # usable partition remains.
            return self._leaf(rows, g_sum, h_sum)
        left = self._node(left_rows, depth + 1)
        right = self._node(right_rows, depth + 1)
        return Internal(feature=key, threshold=float(threshold), default_left=missing_left, left=left, right=right)

    def _leaf(self, rows: np.ndarray, g_sum: float, h_sum: float) -> Leaf:
        weight = -self.cfg.learning_rate * g_sum / (h_sum + self.cfg.l2_leaf)
        ordinal = self.leaf_count
        self.leaf_count += 1
        self.leaf_values[rows] = weight
        return Leaf(weight=weight, ordinal=ordinal)


def train_gbdt(d: Dataset, cfg: GbdtTrainConfig, loss_trace: list | None = None) -> GbdtModel:
    """Boost ``cfg.num_trees`` trees on the dataset.

    ``loss_trace``, when given, receives the mean training logistic loss
    at the base margin and again after every round.
    """
    if d.n == 0:
        raise TrainingError("cannot train on an empty dataset")
    X = d.dense()
    y = d.labels()
    z = 2.0 * y - 1.0
    columns = d.columns
    base = _clamped_base_score(y)
    margins = np.full(d.n, base)
    if loss_trace is not None:
        loss_trace.append(float(np.logaddexp(0.0, -z * margins).mean()))

    trees = []
    for _ in range(cfg.num_trees):
        p = expit(margins)
        g = p - y
        h = p * (1.0 - p)
        grower = _TreeGrower(X, g, h, columns, cfg)
        trees.append(grower.grow())
        margins = margins + grower.leaf_values
        if loss_trace is not None:
            loss_trace.append(float(np.logaddexp(0.0, -z * margins).mean()))

    return GbdtModel(
        trees=tuple(trees),
        learning_rate=cfg.learning_rate,
        base_score=base,
        feature_schema=frozenset(columns),
        config=cfg,
    )


def _route(node: TreeNode, x: FeatureVector) -> Leaf:
    while isinstance(node, Internal):
        if node.feature in x:
            node = node.right if x[node.feature] > node.threshold else node.left
        else:
            node = node.left if node.default_left else node.right
    return node


def predict_margin(m: GbdtModel, x: FeatureVector) -> float:
    """base_score plus the weight of the leaf ``x`` reaches in every tree."""
    total = m.base_score
    for tree in m.trees:
        total += _route(tree, x).weight
    return total


def leaf_indices(m: GbdtModel, x: FeatureVector) -> list[tuple[int, int]]:
    """Per-tree ``(tree_index, leaf_ordinal)`` under the same routing as
    :func:`predict_margin`."""
    return [(k, _route(tree, x).ordinal) for k, tree in enumerate(m.trees)]


# -- batch scoring over a Dataset (kernel-backed) ------------------------


class _FlatTree:
    """Array form of one tree for the routing kernels."""

    __slots__ = ("feature", "threshold", "left", "right", "default_left", "weight", "ordinal")

    def __init__(self, root: TreeNode, col_of: dict[FeatureKey, int]):
        nodes: list[TreeNode] = []

        def visit(node: TreeNode) -> int:
            idx = len(nodes)
            nodes.append(node)
            if isinstance(node, Internal):
                li = visit(node.left)
                ri = visit(node.right)
                links[idx] = (li, ri)
            return idx

        links: dict[int, tuple[int, int]] = {}
        visit(root)
        n = len(nodes)
        self.feature = np.full(n, -1, dtype=np.int32)
        self.threshold = np.zeros(n)
        self.left = np.zeros(n, dtype=np.int32)
        self.right = np.zeros(n, dtype=np.int32)
        self.default_left = np.zeros(n, dtype=np.uint8)
        self.weight = np.zeros(n)
        self.ordinal = np.zeros(n, dtype=np.int32)
        for i, node in enumerate(nodes):
            if isinstance(node, Internal):
                self.feature[i] = col_of[node.feature]
                self.threshold[i] = node.threshold
                self.left[i], self.right[i] = links[i]
                self.default_left[i] = 1 if node.default_left else 0
            else:
                self.weight[i] = node.weight
                self.ordinal[i] = node.ordinal


def _split_keys(m: GbdtModel) -> list[FeatureKey]:
    keys: set[FeatureKey] = set()

    def visit(node: TreeNode):
        if isinstance(node, Internal):
            keys.add(node.feature)
            visit(node.left)
            visit(node.right)

    for tree in m.trees:
        visit(tree)
    return sorted(keys)


def _flat_trees(m: GbdtModel) -> tuple[list[FeatureKey], list[_FlatTree]]:
    if "flat" not in m._cache:
        keys = _split_keys(m)
        col_of = {k: i for i, k in enumerate(keys)}
        m._cache["flat"] = (keys, [_FlatTree(t, col_of) for t in m.trees])
    return m._cache["flat"]


def _routing_matrix(m: GbdtModel, d: Dataset) -> np.ndarray:
    keys, _ = _flat_trees(m)
    col_of = {k: i for i, k in enumerate(keys)}
    X = np.full((d.n, len(keys)), np.nan)
    for i, r in enumerate(d.records):
        for key, value in r.features.items():
            j = col_of.get(key)
            if j is not None:
                X[i, j] = value
    return X


def batch_leaf_ordinals(m: GbdtModel, d: Dataset) -> np.ndarray:
    """n x K matrix of leaf ordinals; row i matches ``leaf_indices`` on record i."""
    keys, flats = _flat_trees(m)
    X = _routing_matrix(m, d)
    out = np.empty((d.n, len(flats)), dtype=np.int32)
    for k, ft in enumerate(flats):
        nodes = _kernels.route_tree(X, ft.feature, ft.threshold, ft.left, ft.right, ft.default_left)
        out[:, k] = ft.ordinal[nodes]
    return out


def batch_margins(m: GbdtModel, d: Dataset) -> np.ndarray:
    """Vector of :func:`predict_margin` values for every record."""
    keys, flats = _flat_trees(m)
    X = _routing_matrix(m, d)
    total = np.full(d.n, m.base_score)
    for ft in flats:
        nodes = _kernels.route_tree(X, ft.feature, ft.threshold, ft.left, ft.right, ft.default_left)
        total += ft.weight[nodes]
    return total


# -- serialization --------------------------------------------------------


def _node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"weight": node.weight, "leaf": node.ordinal}
    return {
        "feature": format_key(node.feature),
        "threshold": node.threshold,
        "default": "left" if node.default_left else "right",
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(obj: dict) -> TreeNode:
    if "leaf" in obj:
        return Leaf(weight=float(obj["weight"]), ordinal=int(obj["leaf"]))
    return Internal(
        feature=parse_key(obj["feature"]),
        threshold=float(obj["threshold"]),
        default_left=obj["default"] == "left",
        left=_node_from_dict(obj["left"]),
        right=_node_from_dict(obj["right"]),
    )


def model_to_json(m: GbdtModel) -> str:
    doc = {
        "version": 1,
        "kind": "gbdt",
        "config": {
            "num_trees": m.config.num_trees,
            "max_depth": m.config.max_depth,
            "learning_rate": m.config.learning_rate,
            "l2_leaf": m.config.l2_leaf,
            "min_split_gain": m.config.min_split_gain,
            "split_mode": m.config.split_mode,
            "bins": m.config.bins,
            "min_child_hessian": m.config.min_child_hessian,
            "seed": m.config.seed,
        },
        "base_score": m.base_score,
        "learning_rate": m.learning_rate,
        "feature_schema": sorted(format_key(k) for k in m.feature_schema),
        "trees": [_node_to_dict(t) for t in m.trees],
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def model_from_json(text: str) -> GbdtModel:
    doc = json.loads(text)
    if doc.get("version") != 1 or doc.get("kind") != "gbdt":
        raise ValueError("not a version-1 gbdt model document")
    cfg = GbdtTrainConfig(**doc["config"])
    return GbdtModel(
        trees=tuple(_node_from_dict(t) for t in doc["trees"]),
        learning_rate=float(doc["learning_rate"]),
        base_score=float(doc["base_score"]),
        feature_schema=frozenset(parse_key(k) for k in doc["feature_schema"]),
        config=cfg,
    )
