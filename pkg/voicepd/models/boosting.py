"""Gradient boosting on the log-loss with squared-error regression trees.

F_0 is the training log-odds; every round fits a tree to the residuals
y - p and replaces its leaf values by the Newton step sum(r) / sum(p(1 - p)).
"""
from typing import Any, Dict

import numpy as np
from scipy.special import expit

from .base import BaseClassifier
from .tree import TreeArrays, TreeBuilder

_P_CLIP = 1e-12


class GradientBoosting(BaseClassifier):
    family = "gradient_boosting"

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        rate = float(self.params["learning_rate"])
        prior = float(np.clip(y.mean(), _P_CLIP, 1.0 - _P_CLIP))
        self.init_ = float(np.log(prior / (1.0 - prior)))
        self.trees_ = []
        raw = np.full(X.shape[0], self.init_)
        for _ in range(int(self.params["n_estimators"])):
            p = expit(raw)
            residual = y - p
            hessian = p * (1.0 - p)

            def newton(rows: np.ndarray) -> float:
                denom = float(hessian[rows].sum())
                if denom < _P_CLIP:
                    return 0.0
                return float(residual[rows].sum()) / denom

            builder = TreeBuilder(
                criterion="mse",
                max_depth=int(self.params["max_depth"]),
                min_samples_leaf=int(self.params["min_samples_leaf"]),
                leaf_value=newton,
            )
            tree = builder.build(X, residual)
            self.trees_.append(tree)
            raw = raw + rate * tree.predict_value(X)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        rate = float(self.params["learning_rate"])
        raw = np.full(X.shape[0], self.init_)
        for tree in self.trees_:
            raw = raw + rate * tree.predict_value(X)
        return raw

    def get_state(self) -> Dict[str, Any]:
        return {"init": self.init_, "trees": [tree.to_state() for tree in self.trees_]}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.init_ = float(state["init"])
        self.trees_ = [TreeArrays.from_state(tree) for tree in state["trees"]]
