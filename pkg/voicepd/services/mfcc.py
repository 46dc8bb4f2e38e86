"""Mel-frequency cepstral coefficients.

Chain per frame: pre-emphasis, framing, Hamming window, FFT magnitude,
triangular mel filterbank, log energy, DCT. The per-segment feature block is
the column mean of the F x num_ceps matrix.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from ..config import MfccParams
from ..errors import FeatureExtractionError, FilterbankError, PreconditionError
from ..utils.cache_utils import get_dsp_cache
from .audio_io import AudioClip

logger = logging.getLogger("voicepd.mfcc")


@dataclass(frozen=True)
class FrameMatrix:
    frames: np.ndarray
    frame_len: int
    hop: int

    @property
    def count(self) -> int:
        return int(self.frames.shape[0])


@dataclass(frozen=True)
class WindowWeights:
    weights: np.ndarray

    def apply(self, frames: np.ndarray) -> np.ndarray:
        return frames * self.weights


@dataclass(frozen=True)
class MelFilterbank:
    """L triangular filters sampled on FFT bins 0..fft_size/2."""

    weights: np.ndarray
    center_hz: np.ndarray
    f_min: float
    f_max: float
    fft_size: int
    sample_rate: int

    @property
    def num_filters(self) -> int:
        return int(self.weights.shape[0])

    @property
    def num_bins(self) -> int:
        return int(self.weights.shape[1])


def pre_emphasis(signal: np.ndarray, alpha: float = 0.95) -> np.ndarray:
    """y[0] = x[0]; y[n] = x[n] - alpha * x[n-1]."""
    x = np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise PreconditionError("pre-emphasis needs a non-empty signal")
    if not 0 <= alpha < 1:
        raise PreconditionError(f"pre-emphasis alpha must lie in [0, 1), got {alpha}")
    return np.concatenate((x[:1], x[1:] - alpha * x[:-1]))


def frame_samples(signal: np.ndarray, frame_len: int, hop: int) -> FrameMatrix:
    """Frames of ``frame_len`` every ``hop`` samples; trailing partial samples are dropped.

    A signal shorter than one frame becomes a single zero-padded frame.
    """
    if frame_len < 1 or hop < 1 or hop > frame_len:
        raise PreconditionError(f"invalid framing: frame_len={frame_len}, hop={hop}")
    x = np.asarray(signal, dtype=np.float64)
    if x.size < frame_len:
        frames = np.pad(x, (0, frame_len - x.size))[None, :]
    else:
        frames = sliding_window_view(x, frame_len)[::hop].copy()
    return FrameMatrix(frames=frames, frame_len=frame_len, hop=hop)


def frame_signal(
    signal: np.ndarray,
    sample_rate: int,
    frame_s: float = 0.032,
    hop_s: float = 0.016,
) -> FrameMatrix:
    if sample_rate <= 0:
        raise PreconditionError("sample_rate must be positive")
    if not frame_s >= hop_s > 0:
        raise PreconditionError("framing needs frame_s >= hop_s > 0")
    frame_len = max(1, int(round(frame_s * sample_rate)))
    hop = max(1, int(round(hop_s * sample_rate)))
    return frame_samples(signal, frame_len, min(hop, frame_len))


def hamming_window(n: int) -> WindowWeights:
    """0.54 - 0.46 cos(2 pi n / (N - 1))."""
    if n < 2:
        raise PreconditionError(f"Hamming window needs N >= 2, got {n}")
    return get_dsp_cache().get_or_build(("hamming", n), lambda: WindowWeights(weights=np.hamming(n)))


def next_power_of_two(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def power_spectrum(frame: np.ndarray, fft_size: Optional[int] = None) -> np.ndarray:
    """|X_k| for k = 0..fft_size/2 of the zero-padded frame (works row-wise on 2-D input)."""
    frame = np.asarray(frame, dtype=np.float64)
    length = frame.shape[-1]
    fft_size = fft_size or next_power_of_two(length)
    if fft_size < length:
        raise PreconditionError(f"fft_size {fft_size} is shorter than the frame ({length})")
    return np.abs(np.fft.rfft(frame, n=fft_size, axis=-1))


def hz_to_mel(f):
    f_arr = np.asarray(f, dtype=np.float64)
    if np.any(f_arr < 0):
        raise PreconditionError("frequency must be non-negative")
    mel = 2595.0 * np.log10(1.0 + f_arr / 700.0)
    return float(mel) if mel.ndim == 0 else mel


def mel_to_hz(m):
    m_arr = np.asarray(m, dtype=np.float64)
    if np.any(m_arr < 0):
        raise PreconditionError("mel value must be non-negative")
    hz = 700.0 * (10.0 ** (m_arr / 2595.0) - 1.0)
    return float(hz) if hz.ndim == 0 else hz


def _build_filterbank(
    num_filters: int, fft_size: int, sample_rate: int, f_min: float, f_max: float
) -> MelFilterbank:
    mel_points = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), num_filters + 2)
    hz_points = mel_to_hz(mel_points)
    bins = np.floor((fft_size + 1) * hz_points / sample_rate).astype(int)
    if np.any(np.diff(bins) == 0):
        raise FilterbankError(
            f"{num_filters} mel filters are too many for a {fft_size}-point FFT at {sample_rate} Hz: "
            "two filter centres share one bin"
        )
    n_bins = fft_size // 2 + 1
    weights = np.zeros((num_filters, n_bins))
    k = np.arange(n_bins)
    for m in range(1, num_filters + 1):
        left, centre, right = bins[m - 1], bins[m], bins[m + 1]
        rising = (k >= left) & (k < centre)
        falling = (k >= centre) & (k < right)
        weights[m - 1, rising] = (k[rising] - left) / (centre - left)
        weights[m - 1, falling] = (right - k[falling]) / (right - centre)
    weights.setflags(write=False)
    return MelFilterbank(
        weights=weights,
        center_hz=hz_points[1:-1],
        f_min=float(f_min),
        f_max=float(f_max),
        fft_size=fft_size,
        sample_rate=sample_rate,
    )


def build_mel_filterbank(
    num_filters: int = 26,
    fft_size: int = 512,
    sample_rate: int = 16000,
    f_min: float = 0.0,
    f_max: Optional[float] = None,
) -> MelFilterbank:
    """Triangular filters on num_filters + 2 equally spaced mel points."""
    f_max = sample_rate / 2.0 if f_max is None else float(f_max)
    if num_filters < 2:
        raise PreconditionError("a mel filterbank needs at least two filters")
    if not 0 <= f_min < f_max <= sample_rate / 2.0:
        raise PreconditionError(f"filterbank range must satisfy 0 <= f_min < f_max <= {sample_rate / 2.0}")
    key = ("mel", num_filters, fft_size, sample_rate, float(f_min), f_max)
    return get_dsp_cache().get_or_build(
        key, lambda: _build_filterbank(num_filters, fft_size, sample_rate, f_min, f_max)
    )


def log_mel_energies(magnitudes: np.ndarray, filterbank: MelFilterbank, floor: float = 1e-10) -> np.ndarray:
    """log(max(S_m^2, floor)) with S_m = sum_k |X_k| M_m(k); row-wise on 2-D input."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    if magnitudes.shape[-1] != filterbank.num_bins:
        raise PreconditionError(
            f"spectrum has {magnitudes.shape[-1]} bins, filterbank expects {filterbank.num_bins}"
        )
    energies = magnitudes @ filterbank.weights.T
    return np.log(np.maximum(np.square(energies), floor))


def dct_cepstrum(log_mel: np.ndarray, num_ceps: int = 13) -> np.ndarray:
    """y(k) = sum_m x_m cos(k (m - 0.5) pi / M) for k < num_ceps; row-wise on 2-D input."""
    log_mel = np.asarray(log_mel, dtype=np.float64)
    if log_mel.shape[-1] < num_ceps:
        raise PreconditionError(f"{log_mel.shape[-1]} mel energies cannot give {num_ceps} coefficients")
    # Unnormalised DCT-II is twice this kernel.
    return dct(log_mel, type=2, axis=-1)[..., :num_ceps] / 2.0


def mfcc_matrix(clip: AudioClip, params: Optional[MfccParams] = None) -> np.ndarray:
    """F x num_ceps coefficients, one row per frame."""
    params = params or MfccParams()
    frame_len = max(1, int(round(params.frame_s * clip.sample_rate)))
    if len(clip) < frame_len:
        raise FeatureExtractionError(
            f"{clip.source_path or '<clip>'}: {len(clip)} samples is shorter than one MFCC frame ({frame_len})"
        )
    emphasised = pre_emphasis(clip.samples, params.pre_emphasis)
    framed = frame_signal(emphasised, clip.sample_rate, params.frame_s, params.hop_s)
    windowed = hamming_window(framed.frame_len).apply(framed.frames)
    fft_size = params.fft_size or next_power_of_two(framed.frame_len)
    magnitudes = power_spectrum(windowed, fft_size)
    filterbank = build_mel_filterbank(
        params.num_filters, fft_size, clip.sample_rate, params.f_min, params.f_max
    )
    log_mel = log_mel_energies(magnitudes, filterbank, params.log_floor)
    coefficients = dct_cepstrum(log_mel, params.num_ceps)
    logger.debug("MFCC matrix %s from %d frames", coefficients.shape, framed.count)
    return coefficients


def mfcc_features(clip: AudioClip, params: Optional[MfccParams] = None) -> np.ndarray:
    """Column mean of the MFCC matrix."""
    return mfcc_matrix(clip, params).mean(axis=0)


def write_mfcc_csv(matrix: np.ndarray, path: Union[str, Path]) -> Path:
    path = Path(path)
    columns = [f"mfcc_{index}" for index in range(matrix.shape[1])]
    frame = pd.DataFrame(matrix, columns=columns)
    frame.insert(0, "frame_index", np.arange(matrix.shape[0]))
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
