import logging
from typing import Any, Dict

import numpy as np

from .base import BaseClassifier
from .tree import TreeArrays, TreeBuilder

logger = logging.getLogger("voicepd.forest")


def resolve_max_features(value: Any, n_features: int) -> int:
    if value == "sqrt":
        return max(1, int(np.sqrt(n_features)))
    if value == "all":
        return n_features
    if isinstance(value, float):
        return max(1, int(value * n_features))
    return min(int(value), n_features)


class RandomForest(BaseClassifier):
    """Bagged Gini trees with per-split feature subsampling.

    Every tree draws from its own child of the model seed, so the forest does
    not depend on build order. The score is the fraction of trees voting PD.
    """

    family = "random_forest"
    threshold = 0.5

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        n = X.shape[0]
        max_features = resolve_max_features(self.params["max_features"], X.shape[1])
        children = np.random.SeedSequence(self.seed).spawn(int(self.params["n_estimators"]))
        self.trees_ = []
        for child in children:
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n) if self.params["bootstrap"] else np.arange(n)
            builder = TreeBuilder(
                criterion="gini",
                max_depth=self.params["max_depth"],
                min_samples_leaf=int(self.params["min_samples_leaf"]),
                max_features=max_features,
                rng=rng,
            )
            self.trees_.append(builder.build(X[rows], y[rows]))
        logger.debug("Random forest: %d trees, %d features per split", len(self.trees_), max_features)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        votes = np.vstack([tree.predict_value(X) > 0.5 for tree in self.trees_])
        return votes.mean(axis=0)

    def get_state(self) -> Dict[str, Any]:
        return {"trees": [tree.to_state() for tree in self.trees_]}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.trees_ = [TreeArrays.from_state(tree) for tree in state["trees"]]
