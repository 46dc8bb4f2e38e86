import orjson
import pytest

from voicepd.config import (
    ExperimentConfig,
    FeatureSetSpec,
    MfccParams,
    PitchParams,
    Settings,
    get_settings,
    load_experiment_config,
    parse_experiment_config,
)
from voicepd.errors import ConfigError
from voicepd.models.families import DEFAULT_GRIDS, FAMILIES


def test_defaults_fill_the_experiment():
    config = parse_experiment_config({"seed": 5})
    assert config.cv.seed == 5
    assert config.cv.k == 6 and config.cv.repeats == 10
    assert config.families == list(FAMILIES)
    assert config.grids["svm"] == DEFAULT_GRIDS["svm"]
    assert [fs.label for fs in config.feature_sets] == ["acoustic_11", "all_24", "selected_10"]
    assert config.train_fraction == 0.7


def test_custom_grid_replaces_default_for_that_family_only():
    config = parse_experiment_config({"seed": 1, "grids": {"knn": {"k": [3]}}})
    assert config.grids["knn"] == {"k": [3]}
    assert config.grids["random_forest"] == DEFAULT_GRIDS["random_forest"]


@pytest.mark.parametrize(
    "data",
    [
        {},
        {"seed": 1, "unknown": True},
        {"seed": 1, "families": []},
        {"seed": 1, "families": ["knn", "knn"]},
        {"seed": 1, "grids": {"mlp": {"a": [1]}}},
        {"seed": 1, "grids": {"knn": {"k": []}}},
        {"seed": 1, "feature_sets": []},
        {"seed": 1, "feature_sets": [{"name": "all_24", "k": 3}]},
        {"seed": 1, "feature_sets": [{"name": "all_24"}, {"name": "all_24"}]},
        {"seed": 1, "train_fraction": 1.0},
        {"seed": 1, "cv": {"grouping": "speaker"}},
    ],
)
def test_invalid_configs(data):
    with pytest.raises(ConfigError):
        parse_experiment_config(data)


def test_feature_set_spec_defaults_k():
    assert FeatureSetSpec(name="selected_k").k == 10
    assert FeatureSetSpec(name="selected_k", k=3).label == "selected_3"


def test_overrides_revalidate():
    config = parse_experiment_config({"seed": 1, "cv": {"seed": 4}})
    assert config.cv.seed == 4
    changed = config.with_overrides(seed=9, grouping="subject")
    assert changed.seed == 9 and changed.cv.seed == 9
    assert changed.cv.grouping == "subject"
    assert config.with_overrides() == config


def test_load_experiment_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_bytes(orjson.dumps({"seed": 2, "dataset": "italian"}))
    assert isinstance(load_experiment_config(path), ExperimentConfig)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_experiment_config(path)
    with pytest.raises(ConfigError):
        load_experiment_config(tmp_path / "missing.json")


def test_pitch_and_mfcc_parameter_checks():
    with pytest.raises(ValueError):
        PitchParams(f_min=300.0, f_max=200.0)
    with pytest.raises(ValueError):
        PitchParams(frame_s=0.01)
    with pytest.raises(ValueError):
        MfccParams(num_ceps=30)
    with pytest.raises(ValueError):
        MfccParams(hop_s=0.05)


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("VOICEPD_JOBS", "3")
    monkeypatch.setenv("VOICEPD_LOG_LEVEL", "debug")
    get_settings.cache_clear()
    try:
        settings = get_settings()
        assert settings.jobs == 3
        assert settings.log_level == "debug"
        assert settings.csv_float_format == "%.17g"
    finally:
        get_settings.cache_clear()
    assert Settings().jobs == 1
