from pathlib import Path

import numpy as np
import pytest

from voicepd.errors import DataError
from voicepd.services.corpus_service import (
    ManifestEntry,
    extract_corpus,
    read_manifest,
    scan_italian_dataset,
    scan_mdvr_kcl,
    segment_corpus,
    write_manifest,
)
from voicepd.services.features import FEATURE_NAMES

from .conftest import SR, sine, write_pcm16


def test_read_manifest_resolves_relative_paths(tone_corpus):
    entries = read_manifest(tone_corpus)
    assert len(entries) == 8
    assert Path(entries[0].path) == tone_corpus.parent / "audio" / "hc_0.wav"
    assert entries[0].label == "HC"
    assert entries[0].label_code == 0
    assert entries[-1].label_code == 1
    assert not entries[0].is_segment


def test_manifest_write_then_read(tmp_path):
    wav = write_pcm16(tmp_path / "data" / "a.wav", sine(100.0, 0.1))
    entries = [ManifestEntry(path=str(wav), label="PD", subject_id="S01")]
    out = write_manifest(entries, tmp_path / "m.csv", "0123456789abcdef")
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# voicepd ")
    assert lines[1] == "path,label,subject_id"
    assert lines[2] == "data/a.wav,PD,S01"
    (entry,) = read_manifest(out)
    assert Path(entry.path).resolve() == wav.resolve()
    assert (entry.label, entry.subject_id) == ("PD", "S01")


def test_header_only_manifest_is_empty(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("path,label,subject_id\n")
    assert read_manifest(path) == []


@pytest.mark.parametrize(
    "content",
    [
        "",
        "path,label\na.wav,PD\n",
        "path,label,subject_id\na.wav,XX,S1\n",
        "path,label,subject_id\na.wav,PD,\n",
    ],
)
def test_bad_manifests_are_data_errors(tmp_path, content):
    path = tmp_path / "m.csv"
    path.write_text(content)
    with pytest.raises(DataError):
        read_manifest(path)


def test_missing_manifest(tmp_path):
    with pytest.raises(DataError):
        read_manifest(tmp_path / "none.csv")


def test_label_is_normalised():
    assert ManifestEntry(path="a.wav", label=" pd ", subject_id="S1").label == "PD"


def test_scan_italian_dataset(tmp_path):
    tone = sine(200.0, 0.1)
    write_pcm16(tmp_path / "28 People with Parkinson's disease" / "Speaker A" / "VA1.wav", tone)
    write_pcm16(tmp_path / "28 People with Parkinson's disease" / "Speaker A" / "B1.wav", tone)
    write_pcm16(tmp_path / "22 Elderly Healthy Control" / "Speaker B" / "VE1.wav", tone)
    entries = scan_italian_dataset(tmp_path)
    assert [(e.label, e.subject_id, Path(e.path).name) for e in entries] == [
        ("HC", "Speaker B", "VE1.wav"),
        ("PD", "Speaker A", "VA1.wav"),
    ]
    assert len(scan_italian_dataset(tmp_path, vowels_only=False)) == 3


def test_scan_mdvr_kcl(tmp_path):
    tone = sine(200.0, 0.1)
    write_pcm16(tmp_path / "ReadText" / "PD" / "ID02_pd_2_0_0.wav", tone)
    write_pcm16(tmp_path / "ReadText" / "HC" / "ID00_hc_0_0_0.wav", tone)
    write_pcm16(tmp_path / "ReadText" / "HC" / "notes.wav", tone)
    write_pcm16(tmp_path / "SpontaneousDialogue" / "PD" / "ID02_pd_2_0_0.wav", tone)
    entries = scan_mdvr_kcl(tmp_path)
    assert [(e.label, e.subject_id) for e in entries] == [("HC", "ID00"), ("PD", "ID02")]


def test_scanners_need_a_directory(tmp_path):
    with pytest.raises(DataError):
        scan_italian_dataset(tmp_path / "missing")
    with pytest.raises(DataError):
        scan_mdvr_kcl(tmp_path / "missing")


def test_segment_corpus_splits_at_gaps(tone_corpus, tmp_path):
    rows = segment_corpus(read_manifest(tone_corpus), tmp_path / "segments")
    assert len(rows) == 16
    assert [row.segment_index for row in rows[:2]] == [0, 1]
    assert rows[0].subject_id == "HC0"
    assert Path(rows[0].path).name == "hc_0_seg000.wav"
    assert all(row.is_segment for row in rows)
    assert rows[1].start_sample > rows[0].end_sample


def test_segment_corpus_parallel_matches_serial(tone_corpus, tmp_path):
    entries = read_manifest(tone_corpus)
    serial = segment_corpus(entries, tmp_path / "a")
    parallel = segment_corpus(entries, tmp_path / "b", jobs=2)
    assert [(r.segment_index, r.start_sample, r.end_sample) for r in serial] == [
        (r.segment_index, r.start_sample, r.end_sample) for r in parallel
    ]


def test_colliding_stems_are_prefixed(tmp_path):
    tone = np.concatenate([sine(150.0, 1.0), np.zeros(SR)])
    first = write_pcm16(tmp_path / "a" / "rec.wav", tone)
    second = write_pcm16(tmp_path / "b" / "rec.wav", tone)
    entries = [
        ManifestEntry(path=str(first), label="HC", subject_id="S1"),
        ManifestEntry(path=str(second), label="PD", subject_id="S2"),
    ]
    rows = segment_corpus(entries, tmp_path / "out")
    assert [Path(row.path).name for row in rows] == ["rec_seg000.wav", "S2_rec_seg000.wav"]


def test_extract_corpus_builds_table_and_skips_silence(tone_corpus, tmp_path):
    rows = segment_corpus(read_manifest(tone_corpus), tmp_path / "segments")
    silent = write_pcm16(tmp_path / "silent.wav", np.zeros(SR))
    rows.append(ManifestEntry(path=str(silent), label="HC", subject_id="HC9"))
    matrix, skipped = extract_corpus(rows)
    assert matrix.n_rows == 16
    assert matrix.feature_names == FEATURE_NAMES
    assert matrix.class_counts() == {"HC": 8, "PD": 8}
    assert len(skipped) == 1
    assert skipped[0].path == str(silent)
    f0 = matrix.values[:, FEATURE_NAMES.index("fundamental_frequency")]
    np.testing.assert_allclose(f0[matrix.labels == 0], 120.0, rtol=0.02)
    np.testing.assert_allclose(f0[matrix.labels == 1], 180.0, rtol=0.03)
    jitter = matrix.values[:, FEATURE_NAMES.index("jitter_relative")]
    assert jitter[matrix.labels == 1].min() > jitter[matrix.labels == 0].max()
