"""Fold assignment shared by grid search and repeated k-fold evaluation."""
from typing import Iterator, Sequence, Tuple

import numpy as np

from ..errors import DataError

CLASS_NAMES = {0: "HC", 1: "PD"}


def _class_name(label: int) -> str:
    return CLASS_NAMES.get(int(label), str(label))


def stratified_kfold(labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Return a fold id per row; every class is dealt round-robin over the k folds."""
    labels = np.asarray(labels)
    assignment = np.empty(labels.size, dtype=np.int64)
    offset = 0
    for label in (0, 1):
        idx = np.flatnonzero(labels == label)
        if idx.size < k:
            raise DataError(f"class {_class_name(label)} has {idx.size} rows, fewer than k={k} folds")
        shuffled = rng.permutation(idx)
        assignment[shuffled] = (np.arange(shuffled.size) + offset) % k
        offset = (offset + shuffled.size) % k
    return assignment


def subject_kfold(
    labels: np.ndarray,
    subjects: Sequence[str],
    k: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Fold id per row with every subject confined to a single fold."""
    labels = np.asarray(labels)
    subjects = np.asarray(subjects, dtype=object)
    assignment = np.empty(labels.size, dtype=np.int64)
    for label in (0, 1):
        mask = labels == label
        names = sorted(set(subjects[mask]))
        if len(names) < k:
            raise DataError(
                f"class {_class_name(label)} has {len(names)} subjects, fewer than k={k} folds"
            )
        fold_rows = np.zeros(k, dtype=np.int64)
        for position in rng.permutation(len(names)):
            name = names[position]
            rows = np.flatnonzero(subjects == name)
            if np.any(labels[rows] != label):
                raise DataError(f"subject {name} carries both labels")
            fold = int(np.argmin(fold_rows))
            assignment[rows] = fold
            fold_rows[fold] += rows.size
    return assignment


def iter_folds(assignment: np.ndarray, k: int) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    for fold in range(k):
        test = np.flatnonzero(assignment == fold)
        train = np.flatnonzero(assignment != fold)
        yield train, test
