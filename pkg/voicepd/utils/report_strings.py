"""Fixed labels used in rendered report tables."""
from typing import Any

from ..models.families import ABBREVIATIONS

METRIC_NAMES = ("accuracy", "specificity", "recall", "precision", "f1")

TEMPLATES: dict[str, str] = {
    "accuracy": "Accuracy",
    "specificity": "Specificity",
    "recall": "Recall",
    "precision": "Precision",
    "f1": "F1 score",
    "acoustic_11": "11 acoustic features",
    "all_24": "13 MFCC and 11 acoustic features",
    "selected": "{0} selected features",
    "block_header": "## {0} ({1})",
}


def get_model_label(family: str) -> str:
    return ABBREVIATIONS.get(family, family)


def get_feature_set_label(feature_set: str) -> str:
    """Human label for a feature-set key such as ``all_24`` or ``selected_10``."""
    if feature_set.startswith("selected_"):
        return get_string("selected", feature_set.split("_", 1)[1])
    return TEMPLATES.get(feature_set, feature_set)


def get_string(key: str, *args: Any) -> str:
    template = TEMPLATES.get(key, "")
    if not template:
        return "" if not args else str(args[0])
    if args:
        try:
            return template.format(*args)
        except (IndexError, KeyError):
            return template
    return template
