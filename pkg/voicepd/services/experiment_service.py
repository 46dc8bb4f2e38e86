"""Runs configured feature sets x model families through tuning, hold-out and repeated CV."""
import logging
from pathlib import Path
from typing import Dict, List, Union

from ..config import ExperimentConfig
from ..errors import DataError
from ..models.grid_search import grid_search
from ..models.registry import fit
from ..utils.fingerprint import config_hash
from .evaluation import MetricSet, confusion, metrics, repeated_kfold, shuffle_labels
from .feature_set_resolver import ResolvedFeatureSet, resolve_feature_set
from .features import FeatureMatrix, FeaturePipeline, split_train_validation
from .report_service import (
    FeatureSetRecord,
    RunRecord,
    finite_or_none,
    fold_rows,
    grid_record,
    render_record,
    render_report,
    summarise,
    table_from_metrics,
    write_run_record,
)

logger = logging.getLogger("voicepd.experiment")


class ExperimentService:
    def __init__(self, config: ExperimentConfig, jobs: int = 1) -> None:
        self.config = config
        self.jobs = jobs
        self.digest = config_hash(config)
        self.run_id = config.run_id or f"{config.dataset}-{self.digest[:8]}"

    def resolve_feature_sets(self, matrix: FeatureMatrix) -> List[ResolvedFeatureSet]:
        """Resolve every configured feature set against the table; raises ConfigError on a mismatch."""
        return [resolve_feature_set(fs.name, fs.k, matrix.feature_names) for fs in self.config.feature_sets]

    def _pipeline(self, feature_set: ResolvedFeatureSet) -> FeaturePipeline:
        return FeaturePipeline(
            columns=list(feature_set.columns), k=feature_set.k, clip_outliers=self.config.outlier_clipping
        )

    def _check_classes(self, matrix: FeatureMatrix) -> None:
        counts = matrix.class_counts()
        for name, count in counts.items():
            if count < self.config.cv.k:
                raise DataError(f"class {name} has {count} rows, fewer than k={self.config.cv.k} folds")

    def run(self, matrix: FeatureMatrix) -> RunRecord:
        config = self.config
        resolved = self.resolve_feature_sets(matrix)
        self._check_classes(matrix)
        subject_mode = config.cv.grouping == "subject"
        train, validation = split_train_validation(
            matrix, config.train_fraction, config.seed, subject_disjoint=subject_mode
        )
        logger.info(
            "Run %s: %d rows (%d train / %d validation), %d feature sets x %d families",
            self.run_id, matrix.n_rows, train.n_rows, validation.n_rows, len(resolved), len(config.families),
        )
        record = RunRecord(
            run_id=self.run_id,
            config_hash=self.digest,
            dataset=config.dataset,
            config=config.model_dump(mode="json"),
            class_counts=matrix.class_counts(),
        )
        holdout: Dict[str, Dict[str, MetricSet]] = {}

        for feature_set in resolved:
            label = feature_set.label
            template = self._pipeline(feature_set)
            on_train = self._pipeline(feature_set).fit(train.values, train.labels)
            train_x = on_train.transform(train.values)
            validation_x = on_train.transform(validation.values)
            record.feature_sets[label] = FeatureSetRecord(
                columns=[matrix.feature_names[index] for index in feature_set.columns],
                selected=[matrix.feature_names[index] for index in on_train.selected_columns()]
                if feature_set.k is not None
                else None,
                anova_scores=finite_or_none(on_train.selection.as_dict()) if on_train.selection else None,
            )
            for family in config.families:
                search = grid_search(
                    family,
                    config.grids.get(family, {}),
                    train.values,
                    train.labels,
                    folds=config.grid_search_folds,
                    seed=config.seed,
                    subjects=train.subject_ids if subject_mode else None,
                    pipeline=template,
                    jobs=self.jobs,
                )
                record.grid_search.setdefault(label, {})[family] = grid_record(
                    search.best.params, search.cells, search.best_accuracy, search.bypassed
                )
                model = fit(search.best, train_x, train.labels)
                holdout.setdefault(label, {})[family] = metrics(
                    confusion(validation.labels, model.predict(validation_x))
                )
                report = repeated_kfold(
                    matrix, search.best, config.cv, feature_set, config.outlier_clipping, self.jobs
                )
                record.cv.setdefault(label, {})[family] = summarise(report)
                record.folds.setdefault(label, {})[family] = fold_rows(report)
                if config.label_shuffle_control:
                    shuffled = shuffle_labels(matrix, config.seed, by_subject=subject_mode)
                    control = repeated_kfold(
                        shuffled, search.best, config.cv, feature_set, config.outlier_clipping, self.jobs
                    )
                    record.controls.setdefault(label, {})[family] = summarise(control)
        record.holdout = table_from_metrics(holdout)
        return record


def run_experiment(matrix: FeatureMatrix, config: ExperimentConfig, jobs: int = 1) -> RunRecord:
    return ExperimentService(config, jobs).run(matrix)


def write_experiment_outputs(record: RunRecord, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """report.csv, report.txt, report_std.csv, holdout.csv and run.json under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = {
        "report.csv": render_record(record, "csv"),
        "report.txt": render_record(record, "text"),
        "report_std.csv": render_record(record, "csv", stat="std"),
        "holdout.csv": render_report(record.holdout, "csv", record.config_hash, record.title),
    }
    paths = {}
    for name, text in outputs.items():
        path = out_dir / name
        path.write_text(text, encoding="utf-8")
        paths[name] = path
    paths["run.json"] = write_run_record(record, out_dir / "run.json")
    return paths
