"""Input validators shared by the corpus loaders and the classifiers"""
import logging
import re
from typing import Optional

import numpy as np

from ..errors import DimensionMismatchError, FitError

logger = logging.getLogger("voicepd.validators")

_SUBJECT_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.\- ]*$")


class Validator:
    """Validate manifest fields and training inputs"""

    @staticmethod
    def is_valid_label(label: str) -> bool:
        """PD or HC, exactly"""
        is_valid = label in ("PD", "HC")
        if not is_valid:
            logger.warning("Invalid label: %r", label)
        return is_valid

    @staticmethod
    def is_valid_subject_id(subject_id: str) -> bool:
        if not subject_id:
            return False
        is_valid = bool(_SUBJECT_PATTERN.match(subject_id))
        if not is_valid:
            logger.warning("Invalid subject id: %r", subject_id)
        return is_valid

    @staticmethod
    def check_training_data(X: np.ndarray, y: np.ndarray, allow_single_class: bool = False) -> None:
        """Raise FitError unless X is a finite 2-D table with one binary label per row."""
        if X.ndim != 2:
            raise FitError(f"training data must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise FitError(f"{X.shape[0]} rows but {y.size} labels")
        if X.shape[0] == 0:
            raise FitError("no training rows")
        if not np.all(np.isfinite(X)):
            raise FitError("training data holds non-finite values")
        if not np.all(np.isin(y, (0, 1))):
            raise FitError("labels must be 0 (HC) or 1 (PD)")
        if not allow_single_class:
            if X.shape[0] < 2:
                raise FitError("at least two training rows are required")
            if np.unique(y).size < 2:
                raise FitError("training labels hold a single class")

    @staticmethod
    def check_query(X: np.ndarray, n_features: int, family: Optional[str] = None) -> None:
        if X.ndim != 2 or X.shape[1] != n_features:
            columns = X.shape[1] if X.ndim == 2 else X.shape
            raise DimensionMismatchError(
                f"{family or 'model'} was trained on {n_features} features, got {columns}"
            )
