"""Model specification, the estimator interface and the trained-model wrapper."""
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..services.validators import Validator
from .families import DEFAULT_PARAMS, Family


def _check_positive_int(params: Dict[str, Any], name: str, allow_none: bool = False) -> None:
    value = params[name]
    if value is None and allow_none:
        return
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")


def _check_positive_float(params: Dict[str, Any], name: str, allow_zero: bool = False) -> None:
    value = params[name]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{name} must be a number, got {value!r}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ValueError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")


def _validate_family_params(family: str, params: Dict[str, Any]) -> None:
    if family == "knn":
        _check_positive_int(params, "k")
        if params["k"] % 2 == 0:
            raise ValueError(f"knn k must be odd, got {params['k']}")
    elif family == "decision_tree":
        _check_positive_int(params, "max_depth", allow_none=True)
        _check_positive_int(params, "min_samples_leaf")
    elif family == "svm":
        _check_positive_float(params, "C")
        if params["kernel"] not in ("linear", "rbf"):
            raise ValueError(f"svm kernel must be linear or rbf, got {params['kernel']!r}")
        if params["gamma"] != "scale":
            _check_positive_float(params, "gamma")
        _check_positive_float(params, "tol")
        _check_positive_int(params, "max_passes")
        _check_positive_int(params, "max_iter")
    elif family == "naive_bayes":
        _check_positive_float(params, "var_floor")
    elif family == "logistic_regression":
        _check_positive_float(params, "l2_penalty", allow_zero=True)
        _check_positive_float(params, "tol")
        _check_positive_int(params, "max_iter")
    elif family == "gradient_boosting":
        _check_positive_int(params, "n_estimators")
        _check_positive_float(params, "learning_rate")
        _check_positive_int(params, "max_depth")
        _check_positive_int(params, "min_samples_leaf")
    elif family == "random_forest":
        _check_positive_int(params, "n_estimators")
        value = params["max_features"]
        if isinstance(value, float):
            if not 0 < value <= 1:
                raise ValueError(f"fractional max_features must lie in (0, 1], got {value}")
        elif isinstance(value, int) and not isinstance(value, bool):
            _check_positive_int(params, "max_features")
        elif value not in ("sqrt", "all"):
            raise ValueError(f"max_features must be sqrt, all, a count or a fraction, got {value!r}")
        if not isinstance(params["bootstrap"], bool):
            raise ValueError("bootstrap must be true or false")
        _check_positive_int(params, "max_depth", allow_none=True)
        _check_positive_int(params, "min_samples_leaf")


class ModelSpec(BaseModel):
    """A model family, its hyper-parameters (defaults filled in) and a seed."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Family
    params: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def _merge_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict) or data.get("family") not in DEFAULT_PARAMS:
            return data
        family = data["family"]
        given = dict(data.get("params") or {})
        unknown = sorted(set(given) - set(DEFAULT_PARAMS[family]))
        if unknown:
            raise ValueError(f"unknown {family} hyper-parameters: {', '.join(unknown)}")
        merged = dict(DEFAULT_PARAMS[family])
        merged.update(given)
        return {**data, "params": merged}

    @model_validator(mode="after")
    def _check_params(self) -> "ModelSpec":
        _validate_family_params(self.family, self.params)
        return self

    @classmethod
    def default(cls, family: str, seed: int = 0) -> "ModelSpec":
        return cls(family=family, seed=seed)

    def with_params(self, **params: Any) -> "ModelSpec":
        return ModelSpec(family=self.family, params={**self.params, **params}, seed=self.seed)


class BaseClassifier:
    """Binary classifier on labels 0 (HC) / 1 (PD).

    ``decision_function`` grows with confidence in class 1; ``predict``
    thresholds it. Subclasses round-trip their learned state through plain
    dicts of numbers and arrays.
    """

    family: str = ""
    allow_single_class: bool = False
    threshold: float = 0.0

    def __init__(self, params: Dict[str, Any], seed: int = 0) -> None:
        self.params = dict(params)
        self.seed = seed
        self.n_features_: Optional[int] = None

    def fit(self, X: np.ndarray, y: np.ndarray) -> "BaseClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        Validator.check_training_data(X, y, allow_single_class=self.allow_single_class)
        self.n_features_ = X.shape[1]
        self._fit(X, y)
        return self

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        raise NotImplementedError

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.decision_function(X) > self.threshold).astype(np.int64)

    def get_state(self) -> Dict[str, Any]:
        raise NotImplementedError

    def set_state(self, state: Dict[str, Any]) -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    estimator: BaseClassifier
    n_features: int

    @property
    def family(self) -> str:
        return self.spec.family

    def _rows(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        Validator.check_query(X, self.n_features, self.family)
        return X

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.predict(self._rows(X))

    def predict_score(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.decision_function(self._rows(X))
