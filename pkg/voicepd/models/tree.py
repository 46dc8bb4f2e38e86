"""CART trees: Gini classification trees and squared-error regression trees.

Splits are ``x[feature] <= threshold`` goes left, thresholds are midpoints
between consecutive distinct values. Candidate features are scanned in
ascending index order and a split must strictly improve on the best so far,
so ties go to the lowest feature index, then the lowest threshold.
"""
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from .base import BaseClassifier

LeafValue = Callable[[np.ndarray], float]

_REL_TOL = 1e-12


@dataclass
class TreeArrays:
    """Flat node table; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return int(self.feature.size)

    @property
    def depth(self) -> int:
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if depths.size else 0

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            features = self.feature[nodes]
            rows = np.flatnonzero(features >= 0)
            if rows.size == 0:
                return nodes
            current = nodes[rows]
            go_left = X[rows, features[rows]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.left[current], self.right[current])

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_state(self) -> Dict[str, Any]:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "TreeArrays":
        return cls(
            feature=np.asarray(state["feature"], dtype=np.int64),
            threshold=np.asarray(state["threshold"], dtype=np.float64),
            left=np.asarray(state["left"], dtype=np.int64),
            right=np.asarray(state["right"], dtype=np.int64),
            value=np.asarray(state["value"], dtype=np.float64),
        )


def _gini_cost(y_sorted: np.ndarray) -> np.ndarray:
    """n_left * gini_left + n_right * gini_right for every cut after position i."""
    n = y_sorted.size
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    pos_left = np.cumsum(y_sorted)[:-1]
    pos_right = y_sorted.sum() - pos_left
    gini_left = n_left * (1.0 - (pos_left / n_left) ** 2 - (1.0 - pos_left / n_left) ** 2)
    gini_right = n_right * (1.0 - (pos_right / n_right) ** 2 - (1.0 - pos_right / n_right) ** 2)
    return gini_left + gini_right


def _sse_cost(y_sorted: np.ndarray) -> np.ndarray:
    """Sum of squared errors of both sides for every cut after position i."""
    n = y_sorted.size
    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    s_left = np.cumsum(y_sorted)[:-1]
    q_left = np.cumsum(y_sorted * y_sorted)[:-1]
    s_right = y_sorted.sum() - s_left
    q_right = np.sum(y_sorted * y_sorted) - q_left
    return (q_left - s_left ** 2 / n_left) + (q_right - s_right ** 2 / n_right)


def _node_cost(y: np.ndarray, criterion: str) -> float:
    n = y.size
    if criterion == "gini":
        p = y.mean()
        return float(n * (1.0 - p * p - (1.0 - p) ** 2))
    return float(np.sum((y - y.mean()) ** 2))


class TreeBuilder:
    """Greedy depth-first CART growth."""

    def __init__(
        self,
        criterion: str = "gini",
        max_depth: Optional[int] = None,
        min_samples_leaf: int = 1,
        max_features: Optional[int] = None,
        rng: Optional[np.random.Generator] = None,
        leaf_value: Optional[LeafValue] = None,
    ) -> None:
        if criterion not in ("gini", "mse"):
            raise ValueError(f"unknown split criterion {criterion!r}")
        self.criterion = criterion
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.rng = rng
        self.leaf_value = leaf_value
        self._cost = _gini_cost if criterion == "gini" else _sse_cost

    def build(self, X: np.ndarray, y: np.ndarray) -> TreeArrays:
        self._X, self._y = X, np.asarray(y, dtype=np.float64)
        self._feature: List[int] = []
        self._threshold: List[float] = []
        self._left: List[int] = []
        self._right: List[int] = []
        self._value: List[float] = []
        self._grow(np.arange(X.shape[0]), 0)
        return TreeArrays(
            feature=np.asarray(self._feature, dtype=np.int64),
            threshold=np.asarray(self._threshold, dtype=np.float64),
            left=np.asarray(self._left, dtype=np.int64),
            right=np.asarray(self._right, dtype=np.int64),
            value=np.asarray(self._value, dtype=np.float64),
        )

    def _new_node(self) -> int:
        self._feature.append(-1)
        self._threshold.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        self._value.append(0.0)
        return len(self._feature) - 1

    def _candidate_features(self) -> np.ndarray:
        n_features = self._X.shape[1]
        if self.max_features is None or self.max_features >= n_features:
            return np.arange(n_features)
        chosen = self.rng.choice(n_features, size=self.max_features, replace=False)
        return np.sort(chosen)

    def _best_split(self, rows: np.ndarray):
        y = self._y[rows]
        parent = _node_cost(y, self.criterion)
        best_cost, best = parent, None
        leaf = self.min_samples_leaf
        for feature in self._candidate_features():
            x = self._X[rows, feature]
            order = np.argsort(x, kind="stable")
            x_sorted, y_sorted = x[order], y[order]
            costs = self._cost(y_sorted)
            # cut after position i: left holds i + 1 rows
            valid = x_sorted[:-1] < x_sorted[1:]
            sizes = np.arange(1, rows.size)
            valid &= (sizes >= leaf) & (rows.size - sizes >= leaf)
            if not np.any(valid):
                continue
            candidates = np.flatnonzero(valid)
            position = candidates[np.argmin(costs[candidates])]
            cost = float(costs[position])
            if cost < best_cost - _REL_TOL * max(1.0, abs(best_cost)):
                threshold = 0.5 * (x_sorted[position] + x_sorted[position + 1])
                best_cost, best = cost, (int(feature), float(threshold))
        return best

    def _leaf(self, node: int, rows: np.ndarray) -> None:
        if self.leaf_value is not None:
            self._value[node] = float(self.leaf_value(rows))
        else:
            self._value[node] = float(self._y[rows].mean())

    def _grow(self, rows: np.ndarray, depth: int) -> int:
        node = self._new_node()
        y = self._y[rows]
        stop = (
            (self.max_depth is not None and depth >= self.max_depth)
            or rows.size < 2 * self.min_samples_leaf
            or np.all(y == y[0])
        )
        split = None if stop else self._best_split(rows)
        if split is None:
            self._leaf(node, rows)
            return node
        feature, threshold = split
        goes_left = self._X[rows, feature] <= threshold
        self._feature[node] = feature
        self._threshold[node] = threshold
        self._value[node] = float(y.mean())
        left = self._grow(rows[goes_left], depth + 1)
        right = self._grow(rows[~goes_left], depth + 1)
        self._left[node] = left
        self._right[node] = right
        return node


class DecisionTree(BaseClassifier):
    """Gini CART; the score is the PD fraction of the leaf."""

    family = "decision_tree"
    threshold = 0.5

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        builder = TreeBuilder(
            criterion="gini",
            max_depth=self.params["max_depth"],
            min_samples_leaf=int(self.params["min_samples_leaf"]),
        )
        self.tree_ = builder.build(X, y)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.tree_.predict_value(X)

    def get_state(self) -> Dict[str, Any]:
        return {"tree": self.tree_.to_state()}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.tree_ = TreeArrays.from_state(state["tree"])
