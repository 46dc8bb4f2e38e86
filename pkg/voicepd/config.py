import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import orjson
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigError
from .models.families import DEFAULT_GRIDS, FAMILIES, Family


class Settings(BaseModel):
    log_level: str = Field(default="INFO", alias="VOICEPD_LOG_LEVEL")
    jobs: int = Field(default=1, ge=1, alias="VOICEPD_JOBS")
    # Feature CSV float format; %.17g round-trips float64 exactly.
    csv_float_format: str = Field(default="%.17g", alias="VOICEPD_CSV_FLOAT_FORMAT")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    load_dotenv()
    return Settings(**os.environ)


class SegmentationParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    silence_rms_threshold: float = Field(default=0.01, gt=0)
    min_silence_s: float = Field(default=0.5, gt=0)
    min_segment_s: float = Field(default=0.5, gt=0)
    frame_s: float = Field(default=0.025, gt=0)
    hop_s: float = Field(default=0.010, gt=0)


class PitchParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    f_min: float = Field(default=75.0, gt=0)
    f_max: float = Field(default=500.0, gt=0)
    # Three periods of the default floor.
    frame_s: float = Field(default=0.04, gt=0)
    hop_s: float = Field(default=0.01, gt=0)
    voicing_threshold: float = Field(default=0.45, gt=0, lt=1)
    octave_ratio: float = Field(default=0.9, gt=0, le=1)
    # Cycle marks below this fraction of the voiced region's highest peak end a run.
    peak_floor: float = Field(default=0.3, gt=0, lt=1)
    hnr_floor_db: float = -20.0

    @model_validator(mode="after")
    def _check_range(self) -> "PitchParams":
        if self.f_min >= self.f_max:
            raise ValueError("f_min must be below f_max")
        if self.frame_s < 2.0 / self.f_min:
            raise ValueError("frame_s must hold at least two periods of f_min")
        return self


class MfccParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    pre_emphasis: float = Field(default=0.95, ge=0, lt=1)
    frame_s: float = Field(default=0.032, gt=0)
    hop_s: float = Field(default=0.016, gt=0)
    num_filters: int = Field(default=26, ge=2)
    num_ceps: int = Field(default=13, ge=1)
    f_min: float = Field(default=0.0, ge=0)
    f_max: Optional[float] = Field(default=None, gt=0)
    fft_size: Optional[int] = Field(default=None, ge=2)
    log_floor: float = Field(default=1e-10, gt=0)

    @model_validator(mode="after")
    def _check_frames(self) -> "MfccParams":
        if self.hop_s > self.frame_s:
            raise ValueError("hop_s must not exceed frame_s")
        if self.num_ceps > self.num_filters:
            raise ValueError("num_ceps must not exceed num_filters")
        return self


class CvConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(default=6, ge=2)
    repeats: int = Field(default=10, ge=1)
    seed: Optional[int] = None
    grouping: Literal["segment", "subject"] = "segment"


class FeatureSetSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal["acoustic_11", "all_24", "selected_k"]
    k: Optional[int] = Field(default=None, ge=1, le=24)

    @model_validator(mode="after")
    def _default_k(self) -> "FeatureSetSpec":
        if self.name == "selected_k" and self.k is None:
            self.k = 10
        if self.name != "selected_k" and self.k is not None:
            raise ValueError(f"feature set {self.name} does not take k")
        return self

    @property
    def label(self) -> str:
        if self.name == "selected_k":
            return f"selected_{self.k}"
        return self.name


def _default_feature_sets() -> List[FeatureSetSpec]:
    return [
        FeatureSetSpec(name="acoustic_11"),
        FeatureSetSpec(name="all_24"),
        FeatureSetSpec(name="selected_k", k=10),
    ]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    run_id: Optional[str] = None
    dataset: str = "corpus"
    feature_sets: List[FeatureSetSpec] = Field(default_factory=_default_feature_sets)
    families: List[Family] = Field(default_factory=lambda: list(FAMILIES))
    grids: Dict[str, Dict[str, List[Any]]] = Field(default_factory=dict)
    grid_search_folds: int = Field(default=6, ge=2)
    train_fraction: float = Field(default=0.7, gt=0, lt=1)
    outlier_clipping: bool = True
    label_shuffle_control: bool = False
    cv: CvConfig = Field(default_factory=CvConfig)
    segmentation: SegmentationParams = Field(default_factory=SegmentationParams)
    pitch: PitchParams = Field(default_factory=PitchParams)
    mfcc: MfccParams = Field(default_factory=MfccParams)

    @field_validator("families")
    @classmethod
    def _unique_families(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("at least one model family is required")
        if len(set(value)) != len(value):
            raise ValueError("model families must be unique")
        return value

    @field_validator("grids")
    @classmethod
    def _known_grids(cls, value: Dict[str, Dict[str, List[Any]]]) -> Dict[str, Dict[str, List[Any]]]:
        for family, grid in value.items():
            if family not in FAMILIES:
                raise ValueError(f"grid given for unknown family {family!r}")
            for name, candidates in grid.items():
                if not candidates:
                    raise ValueError(f"grid {family}.{name} has no candidate values")
        return value

    @model_validator(mode="after")
    def _fill_defaults(self) -> "ExperimentConfig":
        if self.cv.seed is None:
            self.cv = self.cv.model_copy(update={"seed": self.seed})
        merged = {family: dict(DEFAULT_GRIDS[family]) for family in FAMILIES}
        merged.update(self.grids)
        self.grids = merged
        labels = [fs.label for fs in self.feature_sets]
        if not labels:
            raise ValueError("at least one feature set is required")
        if len(set(labels)) != len(labels):
            raise ValueError("feature sets must be unique")
        return self

    def with_overrides(self, seed: Optional[int] = None, grouping: Optional[str] = None) -> "ExperimentConfig":
        """Apply CLI overrides and re-validate."""
        data = self.model_dump(mode="json")
        if seed is not None:
            data["seed"] = seed
            data["cv"]["seed"] = seed
        if grouping is not None:
            data["cv"]["grouping"] = grouping
        return parse_experiment_config(data)


def parse_experiment_config(data: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc


def load_experiment_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = orjson.loads(raw)
    except orjson.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return parse_experiment_config(data)
