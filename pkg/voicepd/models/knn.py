import logging
from typing import Any, Dict

import numpy as np
from scipy.spatial.distance import cdist

from .base import BaseClassifier

logger = logging.getLogger("voicepd.knn")


class KNearestNeighbours(BaseClassifier):
    """Euclidean k-NN vote.

    The score is the fraction of PD neighbours. Equal distances keep training
    order; a split vote (only possible once k is clamped to an even training
    size) goes to the nearest neighbour.
    """

    family = "knn"
    allow_single_class = True
    threshold = 0.5

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        self.X_ = X.copy()
        self.y_ = y.copy()
        self.k_ = int(self.params["k"])
        if self.k_ > X.shape[0]:
            logger.warning("knn k=%d exceeds %d training rows; using k=%d", self.k_, X.shape[0], X.shape[0])
            self.k_ = X.shape[0]

    def _neighbours(self, X: np.ndarray) -> np.ndarray:
        distances = cdist(X, self.X_, "sqeuclidean")
        return np.argsort(distances, axis=1, kind="stable")[:, : self.k_]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return self.y_[self._neighbours(X)].mean(axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        neighbours = self._neighbours(X)
        votes = self.y_[neighbours]
        positive = votes.sum(axis=1) * 2
        labels = (positive > self.k_).astype(np.int64)
        tied = positive == self.k_
        labels[tied] = votes[tied, 0]
        return labels

    def get_state(self) -> Dict[str, Any]:
        return {"X": self.X_, "y": self.y_, "k": self.k_}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.X_ = np.asarray(state["X"], dtype=np.float64).reshape(-1, self.n_features_)
        self.y_ = np.asarray(state["y"], dtype=np.int64)
        self.k_ = int(state["k"])
