"""Classifier family names, display order, default hyper-parameters and grids."""
from typing import Any, Dict, List, Literal, Tuple

Family = Literal[
    "knn",
    "decision_tree",
    "svm",
    "naive_bayes",
    "logistic_regression",
    "gradient_boosting",
    "random_forest",
]

# Table column order.
FAMILIES: Tuple[str, ...] = (
    "knn",
    "decision_tree",
    "svm",
    "naive_bayes",
    "logistic_regression",
    "gradient_boosting",
    "random_forest",
)

ABBREVIATIONS: Dict[str, str] = {
    "knn": "KNN",
    "decision_tree": "DT",
    "svm": "SVM",
    "naive_bayes": "NB",
    "logistic_regression": "LR",
    "gradient_boosting": "GB",
    "random_forest": "RF",
}

DEFAULT_PARAMS: Dict[str, Dict[str, Any]] = {
    "knn": {"k": 5},
    "decision_tree": {"max_depth": None, "min_samples_leaf": 1},
    "svm": {"C": 1.0, "kernel": "rbf", "gamma": "scale", "tol": 1e-3, "max_passes": 10, "max_iter": 1000},
    "naive_bayes": {"var_floor": 1e-9},
    "logistic_regression": {"l2_penalty": 0.0, "tol": 1e-6, "max_iter": 5000},
    "gradient_boosting": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3, "min_samples_leaf": 1},
    "random_forest": {
        "n_estimators": 100,
        "max_features": "sqrt",
        "bootstrap": True,
        "max_depth": None,
        "min_samples_leaf": 1,
    },
}

DEFAULT_GRIDS: Dict[str, Dict[str, List[Any]]] = {
    "knn": {"k": [1, 3, 5, 7, 9, 11]},
    "decision_tree": {"max_depth": [3, 5, 8, None], "min_samples_leaf": [1, 5]},
    "svm": {"C": [0.1, 1.0, 10.0, 100.0], "kernel": ["linear", "rbf"], "gamma": ["scale", 0.01, 0.1, 1.0]},
    "naive_bayes": {},
    "logistic_regression": {"l2_penalty": [0.0, 0.01, 0.1, 1.0]},
    "gradient_boosting": {"n_estimators": [50, 100, 200], "learning_rate": [0.05, 0.1, 0.3], "max_depth": [1, 2, 3]},
    "random_forest": {"n_estimators": [100, 200], "max_features": ["sqrt", "all"]},
}

# Families whose hyper-parameters are not searched.
UNTUNED_FAMILIES: Tuple[str, ...] = ("naive_bayes",)
