from typing import Any, Dict

import numpy as np

from .base import BaseClassifier


class GaussianNaiveBayes(BaseClassifier):
    """Per-class feature means and variances; score = log P(PD|x) - log P(HC|x)."""

    family = "naive_bayes"

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        floor = float(self.params["var_floor"])
        self.means_ = np.vstack([X[y == c].mean(axis=0) for c in (0, 1)])
        self.vars_ = np.maximum(np.vstack([X[y == c].var(axis=0) for c in (0, 1)]), floor)
        self.log_priors_ = np.log(np.array([np.mean(y == 0), np.mean(y == 1)]))

    def _joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        out = np.empty((X.shape[0], 2))
        for c in (0, 1):
            log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.vars_[c]))
            quad = -0.5 * np.sum((X - self.means_[c]) ** 2 / self.vars_[c], axis=1)
            out[:, c] = self.log_priors_[c] + log_norm + quad
        return out

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        joint = self._joint_log_likelihood(X)
        return joint[:, 1] - joint[:, 0]

    def get_state(self) -> Dict[str, Any]:
        return {"means": self.means_, "vars": self.vars_, "log_priors": self.log_priors_}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.means_ = np.asarray(state["means"], dtype=np.float64)
        self.vars_ = np.asarray(state["vars"], dtype=np.float64)
        self.log_priors_ = np.asarray(state["log_priors"], dtype=np.float64)
