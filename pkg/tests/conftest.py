from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from voicepd.services.audio_io import AudioClip
from voicepd.services.features import FEATURE_NAMES, FeatureMatrix

SR = 16000


def sine(freq: float, duration: float, sr: int = SR, amplitude: float = 0.5, phase: float = 0.0) -> np.ndarray:
    t = np.arange(int(round(duration * sr))) / sr
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


def voiced_tone(freq: float, duration: float, sr: int = SR, amplitude: float = 0.5) -> np.ndarray:
    """Fundamental plus two harmonics, peaky enough for cycle marking."""
    t = np.arange(int(round(duration * sr))) / sr
    wave = np.sin(2 * np.pi * freq * t) + 0.5 * np.sin(4 * np.pi * freq * t) + 0.25 * np.sin(6 * np.pi * freq * t)
    return amplitude * wave / np.max(np.abs(wave))


def make_clip(samples: np.ndarray, sr: int = SR, source: str = "") -> AudioClip:
    return AudioClip(samples=samples, sample_rate=sr, source_path=source)


def write_pcm16(path: Path, samples: np.ndarray, sr: int = SR) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.clip(np.round(samples * 32768.0), -32768, 32767).astype(np.int16)
    wavfile.write(str(path), sr, pcm)
    return path


def blobs(n: int = 200, n_features: int = 2, separation: float = 4.0, seed: int = 0):
    """Two Gaussian classes, unit variance, means ``separation`` sigma apart on every axis."""
    rng = np.random.default_rng(seed)
    half = n // 2
    X0 = rng.normal(0.0, 1.0, size=(half, n_features))
    X1 = rng.normal(separation, 1.0, size=(n - half, n_features))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(half, dtype=np.int64), np.ones(n - half, dtype=np.int64)])
    order = rng.permutation(n)
    return X[order], y[order]


def feature_table(n_per_class: int = 30, separation: float = 4.0, seed: int = 0, subjects_per_class: int = 6) -> FeatureMatrix:
    """Synthetic 24-column table; every feature separates the classes by ``separation`` sigma."""
    rng = np.random.default_rng(seed)
    d = len(FEATURE_NAMES)
    values = np.vstack(
        [rng.normal(0.0, 1.0, size=(n_per_class, d)), rng.normal(separation, 1.0, size=(n_per_class, d))]
    )
    labels = np.repeat([0, 1], n_per_class)
    subjects = [f"HC{i % subjects_per_class:02d}" for i in range(n_per_class)] + [
        f"PD{i % subjects_per_class:02d}" for i in range(n_per_class)
    ]
    return FeatureMatrix(values=values, labels=labels, subject_ids=np.array(subjects, dtype=object))


@pytest.fixture
def sr() -> int:
    return SR


@pytest.fixture
def separable_blobs():
    return blobs()


@pytest.fixture
def separable_table() -> FeatureMatrix:
    return feature_table()


@pytest.fixture
def tone_corpus(tmp_path: Path):
    """Four PD and four HC recordings (two subjects each) with a silent gap in the middle."""
    rows = ["path,label,subject_id"]
    for label, freq, jitter in (("HC", 120.0, 0.0), ("PD", 180.0, 0.02)):
        for index in range(4):
            rng = np.random.default_rng(index + (10 if label == "PD" else 0))
            parts = []
            for _ in range(2):
                cycle_freqs = freq * (1.0 + jitter * rng.standard_normal(int(0.8 * freq)))
                parts.append(np.concatenate([voiced_tone(f, 1.0 / f) for f in cycle_freqs]))
                parts.append(np.zeros(int(0.7 * SR)))
            samples = np.concatenate(parts[:-1])
            name = f"{label.lower()}_{index}.wav"
            write_pcm16(tmp_path / "audio" / name, samples)
            rows.append(f"audio/{name},{label},{label}{index % 2}")
    manifest = tmp_path / "manifest.csv"
    manifest.write_text("\n".join(rows) + "\n", encoding="utf-8")
    return manifest
