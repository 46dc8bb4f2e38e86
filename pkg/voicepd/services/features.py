"""Per-segment feature vectors, the labelled feature table and its preprocessing.

Preprocessing parameters (outlier bounds, min-max scaler, ANOVA selection) are
always learned from training rows and then applied to other rows unchanged.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..config import MfccParams, PitchParams, get_settings
from ..errors import DataError, FeatureExtractionError, InsufficientCyclesError, PreconditionError
from ..utils.fingerprint import provenance_line
from .audio_io import AudioClip
from .mfcc import mfcc_features
from .perturbation import MEASURE_NAMES, perturbation_report
from .pitch import extract_period_track, f0_and_pitch_features, segment_hnr, track_f0

logger = logging.getLogger("voicepd.features")

MFCC_NAMES = tuple(f"mfcc_{index}" for index in range(13))
ACOUSTIC_NAMES = MEASURE_NAMES + ("fundamental_frequency", "hnr", "pitch")
FEATURE_NAMES: Tuple[str, ...] = ACOUSTIC_NAMES + MFCC_NAMES

LABEL_CODES = {"HC": 0, "PD": 1}
LABEL_NAMES = {0: "HC", 1: "PD"}
META_COLUMNS = ("label", "subject_id", "source_path", "segment_index")

# Perturbation needs five cycles for the widest neighbourhood (ppq5 / apq5).
MIN_CYCLES = 5

ArrayOrMatrix = Union[np.ndarray, "FeatureMatrix"]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    names: Tuple[str, ...] = FEATURE_NAMES

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.names),):
            raise PreconditionError(f"feature vector needs {len(self.names)} values, got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = [name for name, value in zip(self.names, values) if not np.isfinite(value)]
            raise FeatureExtractionError(f"non-finite features: {', '.join(bad)}")
        object.__setattr__(self, "values", values)

    def as_dict(self) -> Dict[str, float]:
        return {name: float(value) for name, value in zip(self.names, self.values)}


@dataclass(frozen=True)
class SkipRecord:
    """A segment that produced no feature row, and why."""

    path: str
    reason: str
    segment_index: int = 0


@dataclass(frozen=True)
class FeatureMatrix:
    """Feature rows with binary labels (PD = 1), subject ids and provenance."""

    values: np.ndarray
    labels: np.ndarray
    subject_ids: np.ndarray
    feature_names: Tuple[str, ...] = FEATURE_NAMES
    source_paths: Optional[np.ndarray] = None
    segment_indices: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            values = values.reshape(-1, len(self.feature_names))
        labels = np.asarray(self.labels, dtype=np.int64)
        subjects = np.asarray(self.subject_ids, dtype=object)
        n = values.shape[0]
        if values.shape[1] != len(self.feature_names):
            raise PreconditionError(
                f"{values.shape[1]} columns but {len(self.feature_names)} feature names"
            )
        if labels.shape != (n,) or subjects.shape != (n,):
            raise PreconditionError("row, label and subject counts must match")
        if n and not np.all(np.isin(labels, (0, 1))):
            raise DataError("labels must be binary (HC = 0, PD = 1)")
        if not np.all(np.isfinite(values)):
            raise DataError("feature table holds missing or non-finite values")
        sources = np.asarray(self.source_paths if self.source_paths is not None else [""] * n, dtype=object)
        segments = np.asarray(
            self.segment_indices if self.segment_indices is not None else np.zeros(n), dtype=np.int64
        )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "subject_ids", subjects)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "source_paths", sources)
        object.__setattr__(self, "segment_indices", segments)

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.values.shape[1])

    def __len__(self) -> int:
        return self.n_rows

    def class_counts(self) -> Dict[str, int]:
        return {name: int(np.sum(self.labels == code)) for name, code in LABEL_CODES.items()}

    def subset(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.int64)
        return FeatureMatrix(
            values=self.values[rows],
            labels=self.labels[rows],
            subject_ids=self.subject_ids[rows],
            feature_names=self.feature_names,
            source_paths=self.source_paths[rows],
            segment_indices=self.segment_indices[rows],
        )

    def select_columns(self, columns: Sequence[int]) -> "FeatureMatrix":
        columns = list(columns)
        return FeatureMatrix(
            values=self.values[:, columns],
            labels=self.labels,
            subject_ids=self.subject_ids,
            feature_names=tuple(self.feature_names[index] for index in columns),
            source_paths=self.source_paths,
            segment_indices=self.segment_indices,
        )

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            values=values,
            labels=self.labels,
            subject_ids=self.subject_ids,
            feature_names=self.feature_names,
            source_paths=self.source_paths,
            segment_indices=self.segment_indices,
        )

    def with_labels(self, labels: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            values=self.values,
            labels=labels,
            subject_ids=self.subject_ids,
            feature_names=self.feature_names,
            source_paths=self.source_paths,
            segment_indices=self.segment_indices,
        )

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=list(self.feature_names))
        frame["label"] = [LABEL_NAMES[int(label)] for label in self.labels]
        frame["subject_id"] = self.subject_ids
        frame["source_path"] = self.source_paths
        frame["segment_index"] = self.segment_indices
        return frame

    def to_csv(self, path: Union[str, Path], config_digest: str, float_format: Optional[str] = None) -> Path:
        """Write the table under a ``# voicepd <version> config_hash=<digest>`` line."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        float_format = float_format or get_settings().csv_float_format
        body = self.to_frame().to_csv(index=False, float_format=float_format, lineterminator="\n")
        path.write_text(provenance_line(config_digest) + "\n" + body, encoding="utf-8")
        return path

    @classmethod
    def read_csv(cls, path: Union[str, Path]) -> "FeatureMatrix":
        path = Path(path)
        if not path.is_file():
            raise DataError(f"feature table {path} not found")
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline()
        skip = 1 if first.startswith("#") else 0
        try:
            frame = pd.read_csv(
                path,
                skiprows=skip,
                dtype={"subject_id": str, "source_path": str, "label": str},
                keep_default_na=False,
                float_precision="round_trip",
            )
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot parse feature table {path}: {exc}") from exc
        missing = [name for name in ("label", "subject_id") if name not in frame.columns]
        if missing:
            raise DataError(f"feature table {path} lacks columns: {', '.join(missing)}")
        names = tuple(column for column in frame.columns if column not in META_COLUMNS)
        unknown = [label for label in frame["label"].unique() if label not in LABEL_CODES]
        if unknown:
            raise DataError(f"feature table {path} has labels other than PD/HC: {unknown}")
        try:
            values = frame[list(names)].to_numpy(dtype=np.float64)
        except ValueError as exc:
            raise DataError(f"feature table {path} holds non-numeric feature values") from exc
        return cls(
            values=values,
            labels=frame["label"].map(LABEL_CODES).to_numpy(),
            subject_ids=frame["subject_id"].to_numpy(dtype=object),
            feature_names=names,
            source_paths=frame["source_path"].to_numpy(dtype=object) if "source_path" in frame else None,
            segment_indices=frame["segment_index"].to_numpy() if "segment_index" in frame else None,
        )

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[FeatureVector],
        labels: Sequence[int],
        subject_ids: Sequence[str],
        source_paths: Optional[Sequence[str]] = None,
        segment_indices: Optional[Sequence[int]] = None,
    ) -> "FeatureMatrix":
        values = np.vstack([vector.values for vector in vectors]) if vectors else np.zeros((0, len(FEATURE_NAMES)))
        return cls(
            values=values,
            labels=np.asarray(labels, dtype=np.int64),
            subject_ids=np.asarray(list(subject_ids), dtype=object),
            source_paths=None if source_paths is None else np.asarray(list(source_paths), dtype=object),
            segment_indices=segment_indices,
        )


class FeatureExtractor:
    """Runs pitch, perturbation and MFCC analysis on one segment."""

    def __init__(self, pitch_params: Optional[PitchParams] = None, mfcc_params: Optional[MfccParams] = None) -> None:
        self.pitch_params = pitch_params or PitchParams()
        self.mfcc_params = mfcc_params or MfccParams()

    def extract(self, segment: AudioClip) -> FeatureVector:
        params = self.pitch_params
        contour = track_f0(segment, params)
        track = extract_period_track(segment, contour, params.f_min, params.f_max, params.peak_floor)
        if track.count < MIN_CYCLES:
            raise InsufficientCyclesError("feature_vector", MIN_CYCLES, track.count)
        perturbation = perturbation_report(track)
        f0_mean, f0_median = f0_and_pitch_features(contour)
        hnr = segment_hnr(segment, contour, params.hnr_floor_db)
        mfcc = mfcc_features(segment, self.mfcc_params)
        values = [perturbation[name] for name in MEASURE_NAMES] + [f0_mean, hnr, f0_median] + list(mfcc)
        return FeatureVector(values=np.asarray(values))


def assemble_feature_vector(
    segment: AudioClip,
    pitch_params: Optional[PitchParams] = None,
    mfcc_params: Optional[MfccParams] = None,
) -> FeatureVector:
    return FeatureExtractor(pitch_params, mfcc_params).extract(segment)


def _as_array(data: ArrayOrMatrix) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        return data.values
    return np.asarray(data, dtype=np.float64)


def _rewrap(data: ArrayOrMatrix, values: np.ndarray) -> ArrayOrMatrix:
    if isinstance(data, FeatureMatrix):
        return data.with_values(values)
    return values


@dataclass(frozen=True)
class OutlierBounds:
    lower: np.ndarray
    upper: np.ndarray


def fit_outlier_bounds(train: ArrayOrMatrix) -> OutlierBounds:
    """Per feature [Q1 - 1.5 IQR, Q3 + 1.5 IQR] from training rows."""
    values = _as_array(train)
    if values.shape[0] < 4:
        raise PreconditionError(f"outlier bounds need at least 4 training rows, got {values.shape[0]}")
    q1, q3 = np.percentile(values, [25, 75], axis=0)
    iqr = q3 - q1
    return OutlierBounds(lower=q1 - 1.5 * iqr, upper=q3 + 1.5 * iqr)


def apply_outlier_bounds(bounds: OutlierBounds, rows: ArrayOrMatrix) -> ArrayOrMatrix:
    return _rewrap(rows, np.clip(_as_array(rows), bounds.lower, bounds.upper))


def outlier_clip(train: ArrayOrMatrix) -> Tuple[ArrayOrMatrix, OutlierBounds]:
    """Winsorize training rows to their own IQR fences; the fences are returned for reuse."""
    bounds = fit_outlier_bounds(train)
    return apply_outlier_bounds(bounds, train), bounds


@dataclass(frozen=True)
class ScalerParams:
    minimum: np.ndarray
    maximum: np.ndarray


def fit_min_max(train: ArrayOrMatrix) -> ScalerParams:
    values = _as_array(train)
    if values.shape[0] == 0:
        raise PreconditionError("min-max scaling needs at least one training row")
    return ScalerParams(minimum=values.min(axis=0), maximum=values.max(axis=0))


def apply_min_max(params: ScalerParams, rows: ArrayOrMatrix) -> ArrayOrMatrix:
    """(x - min) / (max - min); constant features map to 0 and nothing is clamped."""
    values = _as_array(rows)
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (values - params.minimum) / safe, 0.0)
    return _rewrap(rows, scaled)


def _check_classes(labels: np.ndarray, minimum: int, what: str) -> None:
    for code, name in LABEL_NAMES.items():
        count = int(np.sum(labels == code))
        if count < minimum:
            raise DataError(f"class {name} has {count} rows; {what} needs at least {minimum}")


def _class_train_count(size: int, train_fraction: float) -> int:
    return int(min(size - 1, max(1, round(size * train_fraction))))


def split_train_validation(
    matrix: FeatureMatrix,
    train_fraction: float = 0.7,
    seed: int = 0,
    subject_disjoint: bool = False,
) -> Tuple[FeatureMatrix, FeatureMatrix]:
    """Stratified split; with ``subject_disjoint`` no subject appears on both sides."""
    if not 0 < train_fraction < 1:
        raise PreconditionError("train_fraction must lie in (0, 1)")
    _check_classes(matrix.labels, 2, "a train/validation split")
    rng = np.random.default_rng(seed)
    train_rows: List[int] = []
    for code in (0, 1):
        rows = np.flatnonzero(matrix.labels == code)
        target = _class_train_count(rows.size, train_fraction)
        if not subject_disjoint:
            train_rows.extend(rng.permutation(rows)[:target].tolist())
            continue
        subjects = sorted(set(matrix.subject_ids[rows]))
        if len(subjects) < 2:
            raise DataError(f"class {LABEL_NAMES[code]} has fewer than 2 subjects for a subject-disjoint split")
        taken = 0
        order = rng.permutation(len(subjects))
        for position, subject_index in enumerate(order):
            if taken >= target or position == len(order) - 1:
                break
            subject_rows = rows[matrix.subject_ids[rows] == subjects[subject_index]]
            train_rows.extend(subject_rows.tolist())
            taken += subject_rows.size
    train_idx = np.sort(np.asarray(train_rows, dtype=np.int64))
    validation_idx = np.setdiff1d(np.arange(matrix.n_rows), train_idx)
    logger.debug("Split %d rows into %d train / %d validation", matrix.n_rows, train_idx.size, validation_idx.size)
    return matrix.subset(train_idx), matrix.subset(validation_idx)


@dataclass(frozen=True)
class SelectionResult:
    """ANOVA F-score per feature and the descending ranking (ties keep canonical order)."""

    scores: np.ndarray
    ranking: np.ndarray
    feature_names: Tuple[str, ...] = FEATURE_NAMES

    def select_top_k(self, k: int) -> np.ndarray:
        """Indices of the k best features, in canonical column order."""
        if not 1 <= k <= self.scores.size:
            raise PreconditionError(f"k must lie in 1..{self.scores.size}, got {k}")
        return np.sort(self.ranking[:k])

    def as_dict(self) -> Dict[str, float]:
        return {name: float(score) for name, score in zip(self.feature_names, self.scores)}


def anova_f_scores(
    matrix: ArrayOrMatrix,
    labels: Optional[np.ndarray] = None,
    feature_names: Optional[Sequence[str]] = None,
) -> SelectionResult:
    """One-way ANOVA F between the two label groups, per feature.

    Zero within-group variance with separated means scores +inf.
    """
    if isinstance(matrix, FeatureMatrix):
        values, labels = matrix.values, matrix.labels
        feature_names = feature_names or matrix.feature_names
    else:
        values = np.asarray(matrix, dtype=np.float64)
        if labels is None:
            raise PreconditionError("labels are required with a raw array")
    labels = np.asarray(labels)
    _check_classes(labels, 2, "ANOVA feature scoring")
    n = labels.size
    grand = values.mean(axis=0)
    ssb = np.zeros(values.shape[1])
    ssw = np.zeros(values.shape[1])
    for code in (0, 1):
        group = values[labels == code]
        mean = group.mean(axis=0)
        ssb += group.shape[0] * np.square(mean - grand)
        ssw += np.sum(np.square(group - mean), axis=0)
    msw = ssw / (n - 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(ssw > 0, ssb / np.where(msw > 0, msw, 1.0), np.where(ssb > 0, np.inf, 0.0))
    ranking = np.argsort(-scores, kind="stable")
    names = tuple(feature_names) if feature_names is not None else FEATURE_NAMES[: values.shape[1]]
    return SelectionResult(scores=scores, ranking=ranking, feature_names=names)


@dataclass
class FeaturePipeline:
    """Outlier clipping, min-max scaling and optional top-k ANOVA selection.

    ``columns`` restricts the input to a fixed subset first; ``k`` then picks
    the best k of those columns from the training rows.
    """

    columns: Optional[Sequence[int]] = None
    k: Optional[int] = None
    clip_outliers: bool = True
    bounds: Optional[OutlierBounds] = field(default=None, init=False)
    scaler: Optional[ScalerParams] = field(default=None, init=False)
    selection: Optional[SelectionResult] = field(default=None, init=False)
    selected: Optional[np.ndarray] = field(default=None, init=False)

    def _base(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if self.columns is None:
            return values
        return values[:, list(self.columns)]

    def fit(self, values: np.ndarray, labels: np.ndarray) -> "FeaturePipeline":
        base = self._base(values)
        if self.clip_outliers:
            base, self.bounds = outlier_clip(base)
        self.scaler = fit_min_max(base)
        scaled = apply_min_max(self.scaler, base)
        if self.k is not None:
            self.selection = anova_f_scores(scaled, labels)
            self.selected = self.selection.select_top_k(self.k)
        else:
            self.selected = np.arange(base.shape[1])
        return self

    def transform(self, values: np.ndarray) -> np.ndarray:
        if self.scaler is None or self.selected is None:
            raise PreconditionError("FeaturePipeline.transform called before fit")
        base = self._base(values)
        if self.bounds is not None:
            base = apply_outlier_bounds(self.bounds, base)
        return apply_min_max(self.scaler, base)[:, self.selected]

    def fit_transform(self, values: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return self.fit(values, labels).transform(values)

    def selected_columns(self) -> List[int]:
        """Selected columns as indices into the pipeline's input table."""
        if self.selected is None:
            raise PreconditionError("FeaturePipeline is not fitted")
        if self.columns is None:
            return [int(index) for index in self.selected]
        return [int(self.columns[index]) for index in self.selected]
