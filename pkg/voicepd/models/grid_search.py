"""Exhaustive hyper-parameter search by k-fold accuracy on training rows."""
import copy
import itertools
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from ..errors import FitError, GridSearchError, PreconditionError
from ..utils.folds import iter_folds, stratified_kfold, subject_kfold
from ..utils.parallel import run_ordered
from .base import ModelSpec
from .families import UNTUNED_FAMILIES
from .registry import fit

logger = logging.getLogger("voicepd.grid_search")


@dataclass(frozen=True)
class ParamGrid:
    """Candidate values per hyper-parameter; cells enumerate in key order, last key fastest."""

    values: Dict[str, List[Any]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, candidates in self.values.items():
            if len(candidates) == 0:
                raise PreconditionError(f"grid entry {name!r} has no candidate values")

    def cells(self) -> List[Dict[str, Any]]:
        names = list(self.values)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.values[n] for n in names))]

    def __len__(self) -> int:
        return len(self.cells())


@dataclass(frozen=True)
class GridCell:
    params: Dict[str, Any]
    mean_accuracy: Optional[float]
    error: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class GridSearchResult:
    best: ModelSpec
    cells: List[GridCell]
    best_accuracy: Optional[float] = None
    bypassed: bool = False


def _evaluate_cell(
    params: Dict[str, Any],
    family: str,
    seed: int,
    X: np.ndarray,
    y: np.ndarray,
    folds: Sequence,
    pipeline: Any,
) -> GridCell:
    try:
        spec = ModelSpec(family=family, params=params, seed=seed)
        scores = []
        for train, test in folds:
            X_train, X_test = X[train], X[test]
            if pipeline is not None:
                fitted = copy.deepcopy(pipeline).fit(X_train, y[train])
                X_train, X_test = fitted.transform(X_train), fitted.transform(X_test)
            model = fit(spec, X_train, y[train])
            scores.append(float(np.mean(model.predict(X_test) == y[test])))
        return GridCell(params=params, mean_accuracy=float(np.mean(scores)))
    except (ValidationError, FitError, PreconditionError, ValueError) as exc:
        return GridCell(params=params, mean_accuracy=None, error=str(exc).splitlines()[0])


def grid_search(
    family: str,
    grid: Optional[Dict[str, List[Any]]],
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 6,
    seed: int = 0,
    subjects: Optional[Sequence[str]] = None,
    pipeline: Any = None,
    jobs: int = 1,
) -> GridSearchResult:
    """Pick the cell with the best mean fold accuracy; ties keep the earliest cell.

    ``pipeline`` is an unfitted preprocessing template (``fit``/``transform``)
    refitted on the training part of every fold.
    """
    if family in UNTUNED_FAMILIES:
        logger.debug("%s is not tuned; using its defaults", family)
        return GridSearchResult(best=ModelSpec.default(family, seed), cells=[], bypassed=True)
    if folds < 2:
        raise PreconditionError("grid search needs at least 2 folds")
    param_grid = grid if isinstance(grid, ParamGrid) else ParamGrid(dict(grid or {}))
    cells = param_grid.cells()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    rng = np.random.default_rng(seed)
    if subjects is None:
        assignment = stratified_kfold(y, folds, rng)
    else:
        assignment = subject_kfold(y, subjects, folds, rng)
    fold_list = list(iter_folds(assignment, folds))
    worker = partial(_evaluate_cell, family=family, seed=seed, X=X, y=y, folds=fold_list, pipeline=pipeline)
    results = run_ordered(worker, cells, jobs)

    best_index, best_accuracy = None, -1.0
    for index, cell in enumerate(results):
        if not cell.valid:
            logger.warning("Grid cell %s for %s is invalid: %s", cell.params, family, cell.error)
            continue
        if cell.mean_accuracy > best_accuracy:
            best_index, best_accuracy = index, cell.mean_accuracy
    if best_index is None:
        raise GridSearchError(f"every grid cell for {family} failed to fit")
    best = ModelSpec(family=family, params=results[best_index].params, seed=seed)
    logger.info(
        "Grid search %s: %d cells, best %s (accuracy %.4f)", family, len(cells), best.params, best_accuracy
    )
    return GridSearchResult(best=best, cells=results, best_accuracy=best_accuracy)
