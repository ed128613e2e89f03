"""CART-style binary decision trees with an exhaustive greedy split search.

Split thresholds sit at midpoints between adjacent distinct sorted values.
Equal-gain ties go to the lowest feature index, then the lowest threshold,
so refits are identical across platforms. The growing loop is compiled
with numba; the tree is stored as flat arrays (`feature < 0` marks a leaf).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numba import njit

_NO_LIMIT = 1 << 30


@dataclass
class TreeParams:
    max_depth: int | None = None
    min_leaf: int = 1
    mtry: int | None = None  # features considered per split; None = all
    criterion: str = "gini"  # "gini" for class targets, "variance" for regression
    seed: int = 0

    def __post_init__(self) -> None:
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.criterion not in ("gini", "variance"):
            raise ValueError(f"unknown criterion {self.criterion!r}")


@njit(cache=True, inline="always")
def _next_rand(state: np.ndarray) -> np.uint64:
    x = state[0]
    x ^= x << np.uint64(13)
    x ^= x >> np.uint64(7)
    x ^= x << np.uint64(17)
    state[0] = x
    return x


@njit(cache=True)
def _grow(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    max_depth: int,
    min_leaf: int,
    mtry: int,
    use_gini: bool,
    rng_state: np.ndarray,
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    n_samples: np.ndarray,
) -> int:
    n_features = X.shape[1]
    n_total = idx.size
    cap = feature.size
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n_total
    stack[0, 3] = 0
    top = 1
    node_count = 1
    feat_buf = np.arange(n_features)
    vals = np.empty(n_total)
    tgt = np.empty(n_total)
    part = np.empty(n_total, dtype=np.int64)

    while top > 0:
        top -= 1
        node_id = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n = end - start

        s = 0.0
        ss = 0.0
        for i in range(start, end):
            v = y[idx[i]]
            s += v
            ss += v * v
        mean = s / n
        value[node_id] = mean
        n_samples[node_id] = n
        imp_parent = ss / n - mean * mean
        if use_gini:
            imp_parent = 2.0 * imp_parent
        feature[node_id] = -1

        if depth >= max_depth or n < 2 * min_leaf or imp_parent <= 0.0:
            continue

        if mtry < n_features:
            for j in range(mtry):
                r = j + int(_next_rand(rng_state) % np.uint64(n_features - j))
                tmp = feat_buf[j]
                feat_buf[j] = feat_buf[r]
                feat_buf[r] = tmp
            chosen = np.sort(feat_buf[:mtry])
        else:
            chosen = feat_buf

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        best_nl = 0
        for fpos in range(chosen.size):
            f = chosen[fpos]
            for i in range(n):
                row = idx[start + i]
                vals[i] = X[row, f]
                tgt[i] = y[row]
            order = np.argsort(vals[:n])
            left_sum = 0.0
            left_ss = 0.0
            for i in range(n - 1):
                v = tgt[order[i]]
                left_sum += v
                left_ss += v * v
                if vals[order[i]] == vals[order[i + 1]]:
                    continue
                nl = i + 1
                nr = n - nl
                if nl < min_leaf or nr < min_leaf:
                    continue
                ml = left_sum / nl
                mr = (s - left_sum) / nr
                il = left_ss / nl - ml * ml
                ir = (ss - left_ss) / nr - mr * mr
                if use_gini:
                    il *= 2.0
                    ir *= 2.0
                gain = imp_parent - (nl * il + nr * ir) / n
                if gain > best_gain:
                    best_gain = gain
                    best_feat = f
                    best_thr = 0.5 * (vals[order[i]] + vals[order[i + 1]])
                    best_nl = nl

        if best_feat < 0:
            continue

        li = 0
        ri = best_nl
        for i in range(start, end):
            row = idx[i]
            if X[row, best_feat] <= best_thr:
                part[li] = row
                li += 1
            else:
                part[ri] = row
                ri += 1
        for i in range(n):
            idx[start + i] = part[i]

        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        feature[node_id] = best_feat
        threshold[node_id] = best_thr
        left[node_id] = left_id
        right[node_id] = right_id
        stack[top, 0] = left_id
        stack[top, 1] = start
        stack[top, 2] = start + best_nl
        stack[top, 3] = depth + 1
        stack[top + 1, 0] = right_id
        stack[top + 1, 1] = start + best_nl
        stack[top + 1, 2] = end
        stack[top + 1, 3] = depth + 1
        top += 2
    return node_count


@njit(cache=True)
def _grow_from_sorted(
    X: np.ndarray,
    y: np.ndarray,
    sorted_idx: np.ndarray,  # (n, p): row ids per column, ascending by value
    counts: np.ndarray,  # per-row multiplicity (0 = row unused)
    max_depth: int,
    min_leaf: int,
    use_gini: bool,
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    n_samples: np.ndarray,
) -> int:
    """Grow using a column presort shared across all nodes (and, for
    boosting, across stages). Cost per node is O(p * n_total), which wins
    for shallow trees refit many times on the same matrix."""
    n_total, p = X.shape
    node_of_row = np.full(n_total, -1, dtype=np.int32)
    root_n = 0.0
    root_s = 0.0
    root_ss = 0.0
    for r in range(n_total):
        c = counts[r]
        if c > 0:
            node_of_row[r] = 0
            root_n += c
            root_s += c * y[r]
            root_ss += c * y[r] * y[r]

    cap = feature.size
    stack = np.empty((cap, 2), dtype=np.int64)  # (node_id, depth)
    stats = np.empty((cap, 3))  # (n, sum, sumsq) keyed by node_id
    stats[0, 0] = root_n
    stats[0, 1] = root_s
    stats[0, 2] = root_ss
    stack[0, 0] = 0
    stack[0, 1] = 0
    top = 1
    node_count = 1

    while top > 0:
        top -= 1
        node_id = stack[top, 0]
        depth = stack[top, 1]
        n = stats[node_id, 0]
        s = stats[node_id, 1]
        ss = stats[node_id, 2]
        mean = s / n
        value[node_id] = mean
        n_samples[node_id] = int(n)
        imp_parent = ss / n - mean * mean
        if use_gini:
            imp_parent = 2.0 * imp_parent
        feature[node_id] = -1
        if depth >= max_depth or n < 2 * min_leaf or imp_parent <= 0.0:
            continue

        best_gain = 0.0
        best_feat = -1
        best_thr = 0.0
        for f in range(p):
            left_n = 0.0
            left_s = 0.0
            left_ss = 0.0
            prev_val = 0.0
            seen = False
            for k in range(n_total):
                row = sorted_idx[k, f]
                if node_of_row[row] != node_id:
                    continue
                c = counts[row]
                val = X[row, f]
                if seen and val != prev_val and left_n >= min_leaf and n - left_n >= min_leaf:
                    nl = left_n
                    nr = n - nl
                    ml = left_s / nl
                    mr = (s - left_s) / nr
                    il = left_ss / nl - ml * ml
                    ir = (ss - left_ss) / nr - mr * mr
                    if use_gini:
                        il *= 2.0
                        ir *= 2.0
                    gain = imp_parent - (nl * il + nr * ir) / n
                    if gain > best_gain:
                        best_gain = gain
                        best_feat = f
                        best_thr = 0.5 * (prev_val + val)
                left_n += c
                left_s += c * y[row]
                left_ss += c * y[row] * y[row]
                prev_val = val
                seen = True

        if best_feat < 0:
            continue

        left_id = node_count
        right_id = node_count + 1
        node_count += 2
        feature[node_id] = best_feat
        threshold[node_id] = best_thr
        left[node_id] = left_id
        right[node_id] = right_id
        for j in range(3):
            stats[left_id, j] = 0.0
            stats[right_id, j] = 0.0
        for r in range(n_total):
            if node_of_row[r] != node_id:
                continue
            c = counts[r]
            child = left_id if X[r, best_feat] <= best_thr else right_id
            node_of_row[r] = child
            stats[child, 0] += c
            stats[child, 1] += c * y[r]
            stats[child, 2] += c * y[r] * y[r]
        stack[top, 0] = left_id
        stack[top, 1] = depth + 1
        stack[top + 1, 0] = right_id
        stack[top + 1, 1] = depth + 1
        top += 2
    return node_count


def presort_columns(X: np.ndarray) -> np.ndarray:
    """Per-column ascending row order, computed once and reused across fits."""
    return np.argsort(np.ascontiguousarray(X, dtype=np.float64), axis=0, kind="stable").astype(
        np.int32
    )


def fit_tree_presorted(
    X: np.ndarray,
    y: np.ndarray,
    sorted_idx: np.ndarray,
    params: TreeParams | None = None,
    counts: np.ndarray | None = None,
) -> Tree:
    """Grow a tree against a shared column presort (all features considered).

    Produces the same greedy splits as :func:`fit_tree` with ``mtry=p``;
    used by boosting, where the matrix (hence the sort order) is fixed
    across stages.
    """
    params = params or TreeParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.shape
    if counts is None:
        counts = np.ones(n)
    max_depth = params.max_depth if params.max_depth is not None else _NO_LIMIT
    n_used = int(round(float(counts.sum())))
    cap = 2 * max(1, n_used // max(params.min_leaf, 1)) + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    used = _grow_from_sorted(
        X,
        y,
        sorted_idx,
        np.ascontiguousarray(counts, dtype=np.float64),
        max_depth,
        params.min_leaf,
        params.criterion == "gini",
        feature,
        threshold,
        left,
        right,
        value,
        n_samples,
    )
    return Tree(
        feature=feature[:used].copy(),
        threshold=threshold[:used].copy(),
        left=left[:used].copy(),
        right=right[:used].copy(),
        value=value[:used].copy(),
        n_samples=n_samples[:used].copy(),
        params=params,
        n_features=p,
    )


@njit(cache=True)
def _predict(
    X: np.ndarray,
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    value: np.ndarray,
    out: np.ndarray,
) -> None:
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]


@njit(cache=True)
def _leaf_ids(
    X: np.ndarray,
    feature: np.ndarray,
    threshold: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    out: np.ndarray,
) -> None:
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = node


@dataclass
class Tree:
    """Flat-array tree; node 0 is the root, feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    params: TreeParams = field(default_factory=TreeParams)
    n_features: int | None = None
    feature_names: list[str] | None = None

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        _predict(X, self.feature, self.threshold, self.left, self.right, self.value, out)
        return out

    # classification trees store class frequencies in their leaves
    predict_proba = predict

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        out = np.empty(X.shape[0], dtype=np.int64)
        _leaf_ids(X, self.feature, self.threshold, self.left, self.right, out)
        return out

    def root_split(self) -> tuple[int, float] | None:
        if self.feature[0] < 0:
            return None
        return int(self.feature[0]), float(self.threshold[0])

    def to_nested(self, node: int = 0) -> dict[str, Any]:
        if self.feature[node] < 0:
            return {"value": float(self.value[node]), "n": int(self.n_samples[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "n": int(self.n_samples[node]),
            "left": self.to_nested(int(self.left[node])),
            "right": self.to_nested(int(self.right[node])),
        }

    @classmethod
    def from_nested(cls, obj: dict[str, Any], params: TreeParams | None = None) -> "Tree":
        feature: list[int] = []
        threshold: list[float] = []
        left: list[int] = []
        right: list[int] = []
        value: list[float] = []
        n_samples: list[int] = []

        def add(node: dict[str, Any]) -> int:
            my_id = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(node.get("value", 0.0)))
            n_samples.append(int(node.get("n", 0)))
            if "feature" in node:
                feature[my_id] = int(node["feature"])
                threshold[my_id] = float(node["threshold"])
                left[my_id] = add(node["left"])
                right[my_id] = add(node["right"])
            return my_id

        add(obj)
        return cls(
            feature=np.array(feature, dtype=np.int32),
            threshold=np.array(threshold),
            left=np.array(left, dtype=np.int32),
            right=np.array(right, dtype=np.int32),
            value=np.array(value),
            n_samples=np.array(n_samples, dtype=np.int64),
            params=params or TreeParams(),
        )


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    params: TreeParams | None = None,
    row_indices: np.ndarray | None = None,
    feature_names: list[str] | None = None,
) -> Tree:
    """Grow a tree greedily; a constant target yields a single-leaf tree.

    ``row_indices`` selects (possibly repeated, as in a bootstrap) training
    rows without copying the matrix.
    """
    params = params or TreeParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional")
    n, p = X.shape
    if row_indices is None:
        idx = np.arange(n, dtype=np.int64)
    else:
        idx = np.ascontiguousarray(row_indices, dtype=np.int64).copy()
    if idx.size < 1:
        raise ValueError("no training rows")
    mtry = params.mtry if params.mtry is not None else p
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must be in [1, {p}], got {mtry}")
    max_depth = params.max_depth if params.max_depth is not None else _NO_LIMIT

    cap = 2 * max(1, idx.size // max(params.min_leaf, 1)) + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    value = np.zeros(cap)
    n_samples = np.zeros(cap, dtype=np.int64)
    mixed = (params.seed * 2654435761 + 0x9E3779B97F4A7C15) & ((1 << 64) - 1)
    state = np.array([mixed], dtype=np.uint64)

    used = _grow(
        X,
        y,
        idx,
        max_depth,
        params.min_leaf,
        mtry,
        params.criterion == "gini",
        state,
        feature,
        threshold,
        left,
        right,
        value,
        n_samples,
    )
    return Tree(
        feature=feature[:used].copy(),
        threshold=threshold[:used].copy(),
        left=left[:used].copy(),
        right=right[:used].copy(),
        value=value[:used].copy(),
        n_samples=n_samples[:used].copy(),
        params=params,
        n_features=p,
        feature_names=list(feature_names) if feature_names else None,
    )
