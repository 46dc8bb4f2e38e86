import logging

import orjson
import pandas as pd
import pytest

from voicepd import __version__
from voicepd.main import main
from voicepd.services.features import FEATURE_NAMES

from .conftest import sine, write_pcm16

CONFIG = {
    "seed": 3,
    "run_id": "cli-run",
    "dataset": "synthetic",
    "families": ["knn", "naive_bayes"],
    "grids": {"knn": {"k": [1, 3]}},
    "grid_search_folds": 3,
    "feature_sets": [{"name": "acoustic_11"}, {"name": "selected_k", "k": 5}],
    "cv": {"k": 3, "repeats": 2},
}


def write_config(path, **overrides):
    path.write_bytes(orjson.dumps({**CONFIG, **overrides}))
    return path


@pytest.fixture
def features_csv(tmp_path, separable_table):
    return separable_table.to_csv(tmp_path / "features.csv", "feedfacefeedface")


def test_version_and_help_exit_zero(capsys):
    assert main(["--version"]) == 0
    assert __version__ in capsys.readouterr().out
    assert main(["evaluate", "--help"]) == 0


def test_usage_errors_exit_one():
    assert main([]) == 1
    assert main(["evaluate", "--config", "c.json"]) == 1
    assert main(["frobnicate"]) == 1


def test_evaluate_writes_reproducible_reports(tmp_path, features_csv):
    config = write_config(tmp_path / "config.json")
    assert main(["evaluate", "--features", str(features_csv), "--config", str(config), "--out", str(tmp_path / "a")]) == 0
    assert main(["evaluate", "--manifest", str(features_csv), "--config", str(config), "--out", str(tmp_path / "b")]) == 0
    for name in ("report.csv", "report.txt", "report_std.csv", "holdout.csv", "run.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    report = (tmp_path / "a" / "report.txt").read_text()
    assert "## cli-run (synthetic)" in report
    assert "5 selected features" in report


def test_seed_override_changes_the_record(tmp_path, features_csv):
    config = write_config(tmp_path / "config.json")
    out = tmp_path / "seeded"
    argv = ["evaluate", "--features", str(features_csv), "--config", str(config), "--out", str(out), "--seed", "11"]
    assert main(argv + ["--grouping", "subject"]) == 0
    record = orjson.loads((out / "run.json").read_bytes())
    assert record["config"]["seed"] == 11
    assert record["config"]["cv"]["seed"] == 11
    assert record["config"]["cv"]["grouping"] == "subject"


@pytest.mark.parametrize(
    "overrides",
    [{"seed": "abc"}, {"families": ["perceptron"]}, {"cv": {"k": 1}}, {"feature_sets": [{"name": "mfcc_only"}]}],
)
def test_invalid_config_exits_one_without_outputs(tmp_path, features_csv, overrides):
    config = write_config(tmp_path / "config.json", **overrides)
    out = tmp_path / "out"
    assert main(["evaluate", "--features", str(features_csv), "--config", str(config), "--out", str(out)]) == 1
    assert not out.exists()


def test_missing_inputs_exit_two_or_one(tmp_path, features_csv):
    config = write_config(tmp_path / "config.json")
    out = str(tmp_path / "out")
    assert main(["evaluate", "--features", str(tmp_path / "none.csv"), "--config", str(config), "--out", out]) == 2
    assert main(["evaluate", "--features", str(features_csv), "--config", str(tmp_path / "none.json"), "--out", out]) == 1
    (tmp_path / "broken.json").write_text("{")
    assert main(["evaluate", "--features", str(features_csv), "--config", str(tmp_path / "broken.json"), "--out", out]) == 1


def test_report_merges_run_records(tmp_path, features_csv, capsys):
    for run_id in ("one", "two"):
        config = write_config(tmp_path / f"{run_id}.json", run_id=run_id, families=["naive_bayes"])
        assert main(["evaluate", "--features", str(features_csv), "--config", str(config), "--out", str(tmp_path / run_id)]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "one" / "run.json"), str(tmp_path / "two" / "run.json")]) == 0
    merged = capsys.readouterr().out
    assert "## one (synthetic)" in merged and "## two (synthetic)" in merged

    single = tmp_path / "single.txt"
    assert main(["report", str(tmp_path / "one" / "run.json"), "--out", str(single)]) == 0
    assert single.read_text() == (tmp_path / "one" / "report.txt").read_text()

    assert main(["report", "--format", "csv", str(tmp_path / "one" / "run.json"), "--out", str(tmp_path / "r.csv")]) == 0
    assert (tmp_path / "r.csv").read_text() == (tmp_path / "one" / "report.csv").read_text()

    record = str(tmp_path / "one" / "run.json")
    assert main(["report", record, record]) == 2


def test_segment_and_extract(tone_corpus, tmp_path):
    segments = tmp_path / "segments"
    assert main(["segment", "--manifest", str(tone_corpus), "--out", str(segments)]) == 0
    manifest = segments / "segments.csv"
    rows = pd.read_csv(manifest, skiprows=1)
    assert len(rows) == 16
    assert list(rows.columns[:3]) == ["path", "label", "subject_id"]
    assert set(rows["subject_id"]) == {"HC0", "HC1", "PD0", "PD1"}

    first, second = tmp_path / "f1.csv", tmp_path / "f2.csv"
    assert main(["extract", "--manifest", str(manifest), "--out", str(first)]) == 0
    assert main(["extract", "--manifest", str(manifest), "--out", str(second), "--jobs", "2"]) == 0
    assert first.read_bytes() == second.read_bytes()
    table = pd.read_csv(first, skiprows=1)
    assert list(table.columns[:24]) == list(FEATURE_NAMES)
    assert len(table) == 16


def test_extract_skips_unvoiced_files(tmp_path, caplog):
    caplog.set_level(logging.DEBUG, logger="voicepd")
    write_pcm16(tmp_path / "tone.wav", sine(150.0, 0.6))
    write_pcm16(tmp_path / "silent.wav", sine(150.0, 0.6) * 0.0)
    (tmp_path / "m.csv").write_text("path,label,subject_id\ntone.wav,PD,S1\nsilent.wav,HC,S2\n")
    out = tmp_path / "features.csv"
    assert main(["extract", "--manifest", str(tmp_path / "m.csv"), "--out", str(out)]) == 0
    assert len(pd.read_csv(out, skiprows=1)) == 1
    assert "DSP cache in the main process" in caplog.text


def test_empty_manifest_gives_empty_outputs(tmp_path):
    manifest = tmp_path / "m.csv"
    manifest.write_text("path,label,subject_id\n")
    assert main(["segment", "--manifest", str(manifest), "--out", str(tmp_path / "seg")]) == 0
    assert len(pd.read_csv(tmp_path / "seg" / "segments.csv", skiprows=1)) == 0
    assert main(["extract", "--manifest", str(manifest), "--out", str(tmp_path / "f.csv")]) == 0
    assert len(pd.read_csv(tmp_path / "f.csv", skiprows=1)) == 0


def test_bad_manifest_exits_two(tmp_path):
    assert main(["segment", "--manifest", str(tmp_path / "none.csv"), "--out", str(tmp_path / "seg")]) == 2
    manifest = tmp_path / "m.csv"
    manifest.write_text("path,label,subject_id\nmissing.wav,PD,S1\n")
    assert main(["extract", "--manifest", str(manifest), "--out", str(tmp_path / "f.csv")]) == 2


def test_manifest_command(tmp_path):
    write_pcm16(tmp_path / "data" / "ReadText" / "PD" / "ID02_pd_2_0_0.wav", sine(150.0, 0.2))
    write_pcm16(tmp_path / "data" / "ReadText" / "HC" / "ID00_hc_0_0_0.wav", sine(150.0, 0.2))
    out = tmp_path / "manifest.csv"
    assert main(["manifest", "--dataset", "mdvr-kcl", "--root", str(tmp_path / "data"), "--out", str(out)]) == 0
    rows = pd.read_csv(out, skiprows=1)
    assert list(rows["label"]) == ["HC", "PD"]
    assert list(rows["path"]) == ["data/ReadText/HC/ID00_hc_0_0_0.wav", "data/ReadText/PD/ID02_pd_2_0_0.wav"]
