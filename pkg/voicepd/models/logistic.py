"""L2-regularised logistic regression fitted by full-batch gradient descent.

Objective: mean log-loss + (l2_penalty / 2) * ||w||^2, bias not penalised.
The step is 1 / L with L the Lipschitz bound of the gradient.
"""
import logging
from typing import Any, Dict, Tuple

import numpy as np
from scipy.special import expit

from .base import BaseClassifier

logger = logging.getLogger("voicepd.logistic")


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def loss_and_gradient(
    theta: np.ndarray, X: np.ndarray, y: np.ndarray, l2_penalty: float = 0.0
) -> Tuple[float, np.ndarray]:
    """Objective and gradient at ``theta`` = (weights..., bias)."""
    Xa = _augment(X)
    z = Xa @ theta
    weights = theta[:-1]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_penalty * np.dot(weights, weights))
    grad = Xa.T @ (expit(z) - y) / X.shape[0]
    grad[:-1] += l2_penalty * weights
    return loss, grad


class LogisticRegression(BaseClassifier):
    family = "logistic_regression"

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        l2 = float(self.params["l2_penalty"])
        tol = float(self.params["tol"])
        max_iter = int(self.params["max_iter"])
        Xa = _augment(X)
        lipschitz = 0.25 * float(np.linalg.eigvalsh(Xa.T @ Xa / X.shape[0]).max()) + l2
        step = 1.0 / max(lipschitz, 1e-12)
        theta = np.zeros(Xa.shape[1])
        y = y.astype(np.float64)
        for iteration in range(max_iter):
            _, grad = loss_and_gradient(theta, X, y, l2)
            if np.max(np.abs(grad)) < tol:
                logger.debug("Logistic regression converged after %d iterations", iteration)
                break
            theta -= step * grad
        self.coef_ = theta[:-1].copy()
        self.intercept_ = float(theta[-1])

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coef_ + self.intercept_

    def get_state(self) -> Dict[str, Any]:
        return {"coef": self.coef_, "intercept": self.intercept_}

    def set_state(self, state: Dict[str, Any]) -> None:
        self.coef_ = np.asarray(state["coef"], dtype=np.float64)
        self.intercept_ = float(state["intercept"])
