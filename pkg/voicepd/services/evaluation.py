"""Binary metrics and repeated k-fold cross-validation."""
import logging
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import CvConfig
from ..errors import PreconditionError
from ..models.base import ModelSpec
from ..models.grid_search import grid_search
from ..models.registry import fit
from ..utils.folds import iter_folds, stratified_kfold, subject_kfold
from ..utils.parallel import run_ordered
from ..utils.report_strings import METRIC_NAMES
from .feature_set_resolver import ResolvedFeatureSet
from .features import FeatureMatrix, FeaturePipeline

logger = logging.getLogger("voicepd.evaluation")


@dataclass(frozen=True)
class ConfusionCounts:
    """PD (1) is the positive class."""

    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> ConfusionCounts:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise PreconditionError(f"{y_true.size} true labels but {y_pred.size} predictions")
    if not (np.all(np.isin(y_true, (0, 1))) and np.all(np.isin(y_pred, (0, 1)))):
        raise PreconditionError("labels must be binary")
    return ConfusionCounts(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


@dataclass(frozen=True)
class MetricSet:
    """Fractions in [0, 1]; a metric with a zero denominator is 0 and listed in ``degenerate``."""

    accuracy: float
    specificity: float
    recall: float
    precision: float
    f1: float
    degenerate: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_NAMES}


def _ratio(numerator: int, denominator: int, name: str, flags: List[str]) -> float:
    if denominator == 0:
        flags.append(name)
        return 0.0
    return numerator / denominator


def metrics(counts: ConfusionCounts) -> MetricSet:
    if counts.total == 0:
        raise PreconditionError("metrics need at least one evaluated row")
    flags: List[str] = []
    accuracy = (counts.tp + counts.tn) / counts.total
    recall = _ratio(counts.tp, counts.tp + counts.fn, "recall", flags)
    specificity = _ratio(counts.tn, counts.tn + counts.fp, "specificity", flags)
    precision = _ratio(counts.tp, counts.tp + counts.fp, "precision", flags)
    if precision + recall == 0:
        flags.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return MetricSet(accuracy, specificity, recall, precision, f1, tuple(flags))


@dataclass(frozen=True)
class GridPlan:
    """Tune ``family`` over ``grid`` inside every outer training fold."""

    family: str
    grid: Dict[str, List[Any]]
    folds: int = 6


@dataclass(frozen=True)
class FoldResult:
    repeat: int
    fold: int
    counts: ConfusionCounts
    metrics: MetricSet
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass
class CvReport:
    family: str
    feature_set: str
    k: int
    repeats: int
    folds: List[FoldResult]

    @property
    def n_folds(self) -> int:
        return len(self.folds)

    def _column(self, name: str) -> np.ndarray:
        return np.array([getattr(result.metrics, name) for result in self.folds])

    def mean(self) -> Dict[str, float]:
        return {name: float(self._column(name).mean()) for name in METRIC_NAMES}

    def std(self) -> Dict[str, float]:
        return {name: float(self._column(name).std()) for name in METRIC_NAMES}

    def degenerate_counts(self) -> Dict[str, int]:
        counts = {name: 0 for name in METRIC_NAMES}
        for result in self.folds:
            for name in result.metrics.degenerate:
                counts[name] += 1
        return counts


def _fold_pipeline(feature_set: Optional[ResolvedFeatureSet], clip_outliers: bool) -> FeaturePipeline:
    if feature_set is None:
        return FeaturePipeline(clip_outliers=clip_outliers)
    return FeaturePipeline(columns=list(feature_set.columns), k=feature_set.k, clip_outliers=clip_outliers)


def _run_fold(
    task: Tuple[int, int, np.ndarray, np.ndarray],
    X: np.ndarray,
    y: np.ndarray,
    subjects: Optional[np.ndarray],
    spec_or_grid: Union[ModelSpec, GridPlan],
    pipeline: FeaturePipeline,
    seed: int,
) -> FoldResult:
    repeat, fold, train, test = task
    if isinstance(spec_or_grid, GridPlan):
        inner = grid_search(
            spec_or_grid.family,
            spec_or_grid.grid,
            X[train],
            y[train],
            folds=spec_or_grid.folds,
            seed=seed,
            subjects=None if subjects is None else subjects[train],
            pipeline=pipeline,
        )
        spec = inner.best
    else:
        spec = spec_or_grid
    fitted = FeaturePipeline(columns=pipeline.columns, k=pipeline.k, clip_outliers=pipeline.clip_outliers)
    fitted.fit(X[train], y[train])
    model = fit(spec, fitted.transform(X[train]), y[train])
    counts = confusion(y[test], model.predict(fitted.transform(X[test])))
    return FoldResult(repeat=repeat, fold=fold, counts=counts, metrics=metrics(counts), params=dict(spec.params))


def fold_assignments(
    labels: np.ndarray, cfg: CvConfig, subjects: Optional[Sequence[str]] = None
) -> List[np.ndarray]:
    """One fold-id vector per repeat, each from its own child of the CV seed."""
    if cfg.seed is None:
        raise PreconditionError("cross-validation needs an explicit seed")
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.repeats)
    assignments = []
    for child in children:
        rng = np.random.default_rng(child)
        if cfg.grouping == "subject":
            assignments.append(subject_kfold(labels, subjects, cfg.k, rng))
        else:
            assignments.append(stratified_kfold(labels, cfg.k, rng))
    return assignments


def repeated_kfold(
    matrix: FeatureMatrix,
    spec_or_grid: Union[ModelSpec, GridPlan],
    cfg: CvConfig,
    feature_set: Optional[ResolvedFeatureSet] = None,
    clip_outliers: bool = True,
    jobs: int = 1,
) -> CvReport:
    """k-fold CV repeated with fresh partitions; preprocessing is refitted inside every fold."""
    X, y = matrix.values, matrix.labels
    subjects = matrix.subject_ids if cfg.grouping == "subject" else None
    assignments = fold_assignments(y, cfg, matrix.subject_ids)
    tasks = []
    for repeat, assignment in enumerate(assignments):
        for fold, (train, test) in enumerate(iter_folds(assignment, cfg.k)):
            tasks.append((repeat, fold, train, test))
    worker = partial(
        _run_fold,
        X=X,
        y=y,
        subjects=subjects,
        spec_or_grid=spec_or_grid,
        pipeline=_fold_pipeline(feature_set, clip_outliers),
        seed=int(cfg.seed),
    )
    results = run_ordered(worker, tasks, jobs)
    family = spec_or_grid.family
    label = feature_set.label if feature_set is not None else "all"
    report = CvReport(family=family, feature_set=label, k=cfg.k, repeats=cfg.repeats, folds=results)
    logger.info(
        "CV %s on %s: %d folds, mean accuracy %.4f", family, label, report.n_folds, report.mean()["accuracy"]
    )
    return report


def shuffle_labels(matrix: FeatureMatrix, seed: int, by_subject: bool = False) -> FeatureMatrix:
    """Permute labels across rows, or across subjects so each subject keeps one label."""
    rng = np.random.default_rng(seed)
    if not by_subject:
        return matrix.with_labels(rng.permutation(matrix.labels))
    subjects = sorted(set(matrix.subject_ids))
    first_label = {subject: int(matrix.labels[np.flatnonzero(matrix.subject_ids == subject)[0]]) for subject in subjects}
    permuted = rng.permutation([first_label[subject] for subject in subjects])
    mapping = dict(zip(subjects, permuted))
    return matrix.with_labels(np.array([mapping[subject] for subject in matrix.subject_ids]))
