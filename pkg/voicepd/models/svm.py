"""Soft-margin SVM trained with Sequential Minimal Optimization.

Decision function f(x) = sum_i alpha_i y_i K(x_i, x) + b with y in {-1, +1}.
The working pair is chosen Platt-style: every KKT violator i is paired with
the j maximising |E_i - E_j| from the error cache, falling back to a random
j when that step makes no progress.
"""
import logging
from typing import Any, Dict

import numpy as np

from .base import BaseClassifier

logger = logging.getLogger("voicepd.svm")

_ALPHA_EPS = 1e-8


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def linear_kernel(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B.T


def scale_gamma(X: np.ndarray) -> float:
    """1 / (n_features * variance of all training values)."""
    variance = float(X.var())
    if variance <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * variance)


class SupportVectorMachine(BaseClassifier):
    family = "svm"

    def _kernel(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.kernel_ == "linear":
            return linear_kernel(A, B)
        return rbf_kernel(A, B, self.gamma_)

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        self.kernel_ = self.params["kernel"]
        gamma = self.params["gamma"]
        self.gamma_ = scale_gamma(X) if gamma == "scale" else float(gamma)
        C = float(self.params["C"])
        tol = float(self.params["tol"])
        signs = np.where(y == 1, 1.0, -1.0)
        K = self._kernel(X, X)
        n = X.shape[0]
        rng = np.random.default_rng(self.seed)

        alpha = np.zeros(n)
        b = 0.0
        errors = -signs.copy()

        def take_step(i: int, j: int) -> bool:
            nonlocal b
            if i == j:
                return False
            a_i, a_j = alpha[i], alpha[j]
            y_i, y_j = signs[i], signs[j]
            if y_i != y_j:
                low, high = max(0.0, a_j - a_i), min(C, C + a_j - a_i)
            else:
                low, high = max(0.0, a_i + a_j - C), min(C, a_i + a_j)
            if low >= high:
                return False
            eta = 2.0 * K[i, j] - K[i, i] - K[j, j]
            if eta >= 0:
                return False
            new_j = float(np.clip(a_j - y_j * (errors[i] - errors[j]) / eta, low, high))
            if abs(new_j - a_j) < 1e-5 * (new_j + a_j + 1e-5):
                return False
            new_i = a_i + y_i * y_j * (a_j - new_j)
            d_i, d_j = new_i - a_i, new_j - a_j
            b1 = b - errors[i] - y_i * d_i * K[i, i] - y_j * d_j * K[i, j]
            b2 = b - errors[j] - y_i * d_i * K[i, j] - y_j * d_j * K[j, j]
            if 0 < new_i < C:
                new_b = b1
            elif 0 < new_j < C:
                new_b = b2
            else:
                new_b = 0.5 * (b1 + b2)
            alpha[i], alpha[j] = new_i, new_j
            errors[:] += y_i * d_i * K[i] + y_j * d_j * K[j] + (new_b - b)
            b = new_b
            return True

        passes = iterations = 0
        max_passes = int(self.params["max_passes"])
        max_iter = int(self.params["max_iter"])
        while passes < max_passes and iterations < max_iter:
            changed = 0
            for i in range(n):
                r_i = signs[i] * errors[i]
                if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0)):
                    continue
                gaps = np.abs(errors[i] - errors)
                gaps[i] = -1.0
                if take_step(i, int(np.argmax(gaps))):
                    changed += 1
                    continue
                j = int(rng.integers(n - 1))
                if take_step(i, j + (j >= i)):
                    changed += 1
            iterations += 1
            passes = passes + 1 if changed == 0 else 0
        if passes < max_passes:
            logger.warning("SMO stopped after %d iterations without converging", iterations)

        support = alpha > _ALPHA_EPS
        self.support_vectors_ = X[support].copy()
        self.dual_coef_ = (alpha * signs)[support]
        self.intercept_ = float(b)
        logger.debug("SVM trained: %d support vectors of %d rows", int(support.sum()), n)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        if self.support_vectors_.shape[0] == 0:
            return np.full(X.shape[0], self.intercept_)
        return self._kernel(X, self.support_vectors_) @ self.dual_coef_ + self.intercept_

    def get_state(self) -> Dict[str, Any]:
        return {
            "kernel": self.kernel_,
            "gamma": self.gamma_,
            "support_vectors": self.support_vectors_,
            "dual_coef": self.dual_coef_,
            "intercept": self.intercept_,
        }

    def set_state(self, state: Dict[str, Any]) -> None:
        self.kernel_ = state["kernel"]
        self.gamma_ = float(state["gamma"])
        self.support_vectors_ = np.asarray(state["support_vectors"], dtype=np.float64).reshape(-1, self.n_features_)
        self.dual_coef_ = np.asarray(state["dual_coef"], dtype=np.float64)
        self.intercept_ = float(state["intercept"])
