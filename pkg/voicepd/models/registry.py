"""Uniform fit / predict entry points over the seven families."""
import logging
from typing import Dict, Type

import numpy as np

from .base import BaseClassifier, ModelSpec, TrainedModel
from .boosting import GradientBoosting
from .forest import RandomForest
from .knn import KNearestNeighbours
from .logistic import LogisticRegression
from .naive_bayes import GaussianNaiveBayes
from .svm import SupportVectorMachine
from .tree import DecisionTree

logger = logging.getLogger("voicepd.models")

ESTIMATORS: Dict[str, Type[BaseClassifier]] = {
    "knn": KNearestNeighbours,
    "decision_tree": DecisionTree,
    "svm": SupportVectorMachine,
    "naive_bayes": GaussianNaiveBayes,
    "logistic_regression": LogisticRegression,
    "gradient_boosting": GradientBoosting,
    "random_forest": RandomForest,
}


def build_estimator(spec: ModelSpec) -> BaseClassifier:
    return ESTIMATORS[spec.family](spec.params, seed=spec.seed)


def fit(spec: ModelSpec, X: np.ndarray, y: np.ndarray) -> TrainedModel:
    estimator = build_estimator(spec).fit(X, y)
    logger.debug("Fitted %s on %d rows x %d features", spec.family, len(y), estimator.n_features_)
    return TrainedModel(spec=spec, estimator=estimator, n_features=int(estimator.n_features_))


def predict(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    return model.predict(X)


def predict_score(model: TrainedModel, X: np.ndarray) -> np.ndarray:
    return model.predict_score(X)
