"""Autocorrelation F0 tracking, glottal cycle marking and HNR."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import correlate

from ..config import PitchParams
from ..errors import EmptyTrackError, FeatureExtractionError, PreconditionError
from .audio_io import AudioClip

logger = logging.getLogger("voicepd.pitch")

# Upper clamp on r so a perfectly periodic frame stays finite (about 90 dB).
_R_CEILING = 1.0 - 1e-9


@dataclass(frozen=True)
class F0Contour:
    """Per-frame F0 in Hz; NaN marks an unvoiced frame."""

    values: np.ndarray
    frame_hop: float
    frame_length: float
    sample_rate: int

    @property
    def voiced_mask(self) -> np.ndarray:
        return np.isfinite(self.values)

    @property
    def voiced_values(self) -> np.ndarray:
        return self.values[self.voiced_mask]

    @property
    def hop_samples(self) -> int:
        return max(1, int(round(self.frame_hop * self.sample_rate)))

    @property
    def frame_samples(self) -> int:
        return max(1, int(round(self.frame_length * self.sample_rate)))

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class PeriodTrack:
    """Cycle periods T_i (seconds) and peak amplitudes A_i."""

    periods: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        periods = np.asarray(self.periods, dtype=np.float64)
        amplitudes = np.asarray(self.amplitudes, dtype=np.float64)
        if periods.shape != amplitudes.shape or periods.ndim != 1:
            raise PreconditionError("periods and amplitudes must be 1-D sequences of equal length")
        if np.any(periods <= 0):
            raise PreconditionError("every period must be positive")
        if np.any(amplitudes < 0):
            raise PreconditionError("amplitudes must be non-negative")
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def count(self) -> int:
        return int(self.periods.size)

    def __len__(self) -> int:
        return self.count

    @property
    def is_empty(self) -> bool:
        return self.count == 0


def _nccf(frame: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalised cross-correlation of the frame with itself for lags 0..max_lag.

    Each lag is normalised by the energies of the two overlapping parts, so a
    periodic frame peaks at 1 whatever its length or gain.
    """
    raw = np.asarray(frame, dtype=np.float64)
    x = raw - raw.mean()
    n = x.size
    r = np.zeros(min(n, max_lag + 1))
    raw_energy = float(np.dot(raw, raw))
    if raw_energy == 0.0 or float(np.dot(x, x)) <= 1e-12 * raw_energy:
        return r
    full = correlate(x, x, mode="full")[n - 1:n + max_lag]
    energy = np.concatenate(([0.0], np.cumsum(x * x)))
    lags = np.arange(full.size)
    head = energy[n - lags]
    tail = energy[n] - energy[lags]
    denom = np.sqrt(head * tail)
    valid = denom > 1e-12 * energy[n]
    r[valid] = full[valid] / denom[valid]
    return r


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    denom = left - 2.0 * centre + right
    if denom == 0.0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / denom, -0.5, 0.5))


def estimate_f0_frame(
    frame: np.ndarray,
    sample_rate: int,
    f_min: float = 75.0,
    f_max: float = 500.0,
    voicing_threshold: float = 0.45,
    octave_ratio: float = 0.9,
) -> Optional[float]:
    """F0 of one frame in Hz, or None when the frame is unvoiced.

    The peak of the normalised autocorrelation is searched over lags
    [sample_rate/f_max, sample_rate/f_min]; the shortest local maximum within
    ``octave_ratio`` of the best one wins, and its lag is refined by parabolic
    interpolation.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if f_min <= 0 or f_max <= f_min:
        raise PreconditionError("pitch range must satisfy 0 < f_min < f_max")
    min_len = int(np.ceil(2.0 * sample_rate / f_min))
    if frame.size < min_len:
        raise PreconditionError(f"frame of {frame.size} samples is shorter than two periods of f_min ({min_len})")
    lag_lo = max(2, int(np.floor(sample_rate / f_max)))
    lag_hi = int(np.ceil(sample_rate / f_min))
    r = _nccf(frame, lag_hi + 1)
    window = r[lag_lo:lag_hi + 1]
    if window.size == 0 or not np.any(window > 0):
        return None
    best = float(window.max())
    if best < voicing_threshold:
        return None
    lags = np.arange(lag_lo, lag_hi + 1)
    inner = (r[lags] >= r[lags - 1]) & (r[lags] >= r[lags + 1])
    candidates = lags[inner & (r[lags] >= octave_ratio * best)]
    lag = int(candidates[0]) if candidates.size else int(lags[np.argmax(window)])
    refined = lag + _parabolic_offset(r[lag - 1], r[lag], r[lag + 1])
    f0 = sample_rate / refined
    if not f_min <= f0 <= f_max:
        return None
    return float(f0)


def track_f0(clip: AudioClip, params: Optional[PitchParams] = None) -> F0Contour:
    """Run estimate_f0_frame over the clip with the configured frame and hop."""
    params = params or PitchParams()
    sr = clip.sample_rate
    frame_len = max(int(round(params.frame_s * sr)), int(np.ceil(2.0 * sr / params.f_min)))
    hop = max(1, int(round(params.hop_s * sr)))
    if len(clip) < frame_len:
        values = np.zeros(0)
    else:
        frames = sliding_window_view(clip.samples, frame_len)[::hop]
        values = np.full(frames.shape[0], np.nan)
        for index, frame in enumerate(frames):
            f0 = estimate_f0_frame(
                frame, sr, params.f_min, params.f_max, params.voicing_threshold, params.octave_ratio
            )
            if f0 is not None:
                values[index] = f0
    contour = F0Contour(values=values, frame_hop=hop / sr, frame_length=frame_len / sr, sample_rate=sr)
    logger.debug("F0 contour: %d frames, %d voiced", len(contour), int(contour.voiced_mask.sum()))
    return contour


def _refine_peak(samples: np.ndarray, index: int) -> Tuple[float, float]:
    """Sub-sample (position, height) of the peak at ``index``."""
    if index <= 0 or index >= samples.size - 1:
        return float(index), float(samples[index])
    left, centre, right = samples[index - 1], samples[index], samples[index + 1]
    offset = _parabolic_offset(left, centre, right)
    height = centre - 0.25 * (left - right) * offset
    return index + offset, float(height)


def _voiced_regions(contour: F0Contour, length: int):
    """Sample spans covered by runs of consecutive voiced frames, with their frame indices."""
    mask = contour.voiced_mask
    hop, frame_len = contour.hop_samples, contour.frame_samples
    index = 0
    while index < mask.size:
        if not mask[index]:
            index += 1
            continue
        first = index
        while index < mask.size and mask[index]:
            index += 1
        last = index - 1
        yield first, last, first * hop, min(length, last * hop + frame_len)


def _first_peak(x: np.ndarray, onset: int, period: float, end: int) -> int:
    return onset + int(np.argmax(x[onset:min(end, onset + int(np.ceil(period)))]))


def _next_onset(x: np.ndarray, start: int, end: int, floor: float) -> Optional[int]:
    above = np.flatnonzero(x[start:end] >= floor)
    return start + int(above[0]) if above.size else None


def extract_period_track(
    clip: AudioClip,
    contour: F0Contour,
    f_min: float = 75.0,
    f_max: float = 500.0,
    peak_floor: float = 0.3,
) -> PeriodTrack:
    """Mark glottal cycles at successive waveform peaks inside voiced regions.

    A run of marks starts at the first sample reaching ``peak_floor`` times the
    region's highest peak. Each next mark is searched within +-25 % of the local
    period after the previous one and refined to sub-sample precision. A
    candidate below the floor ends the run; marking resumes at the next onset.
    T_i is the interval between consecutive marks of one run and A_i the
    absolute peak height at the start of cycle i.
    """
    if not np.any(contour.voiced_mask):
        raise EmptyTrackError(f"{clip.source_path or '<clip>'}: no voiced frames")
    x = clip.samples
    sr = clip.sample_rate
    hop, frame_len = contour.hop_samples, contour.frame_samples
    periods, amplitudes = [], []

    for first, last, start, end in _voiced_regions(contour, len(clip)):

        def local_period(position: float) -> float:
            frame = int(np.clip(round((position - frame_len / 2) / hop), first, last))
            return sr / contour.values[frame]

        region_peak = float(np.max(x[start:end]))
        if region_peak <= 0:
            continue
        floor = peak_floor * region_peak
        onset = _next_onset(x, start, end, floor)
        while onset is not None:
            mark, height = _refine_peak(x, _first_peak(x, onset, local_period(onset), end))
            marks = [(mark, abs(height))]
            resume = None
            while True:
                period = local_period(mark)
                lo = int(np.floor(mark + 0.75 * period))
                hi = int(np.ceil(mark + 1.25 * period))
                if hi > end or lo >= hi:
                    break
                peak = lo + int(np.argmax(x[lo:hi]))
                if x[peak] < floor:
                    resume = hi
                    break
                mark, height = _refine_peak(x, peak)
                marks.append((mark, abs(height)))

            for (a_pos, a_amp), (b_pos, _) in zip(marks[:-1], marks[1:]):
                periods.append((b_pos - a_pos) / sr)
                amplitudes.append(a_amp)
            onset = _next_onset(x, resume, end, floor) if resume is not None else None

    track_periods = np.asarray(periods, dtype=np.float64)
    track_amps = np.asarray(amplitudes, dtype=np.float64)
    keep = (track_periods >= 1.0 / f_max) & (track_periods <= 1.0 / f_min)
    if not np.all(keep):
        logger.debug("Dropping %d cycles outside the pitch range", int((~keep).sum()))
    return PeriodTrack(periods=track_periods[keep], amplitudes=track_amps[keep])


def hnr_from_autocorrelation(r: float) -> float:
    """10*log10(r / (1 - r)) for r in (0, 1)."""
    r = min(float(r), _R_CEILING)
    if r <= 0:
        raise PreconditionError("r must be positive")
    return float(10.0 * np.log10(r / (1.0 - r)))


@dataclass(frozen=True)
class HnrEstimate:
    db: float
    degenerate: bool = False


def compute_hnr(frame: np.ndarray, f0: float, sample_rate: int, floor_db: float = -20.0) -> HnrEstimate:
    """Harmonics-to-noise ratio from the normalised autocorrelation at one period lag."""
    if f0 <= 0:
        raise PreconditionError("f0 must be positive")
    lag = int(round(sample_rate / f0))
    frame = np.asarray(frame, dtype=np.float64)
    if lag >= frame.size:
        raise PreconditionError(f"frame of {frame.size} samples is shorter than the period lag {lag}")
    r = float(_nccf(frame, lag)[lag])
    if r <= 0:
        return HnrEstimate(db=floor_db, degenerate=True)
    return HnrEstimate(db=max(floor_db, hnr_from_autocorrelation(r)))


def segment_hnr(clip: AudioClip, contour: F0Contour, floor_db: float = -20.0) -> float:
    """Mean HNR over the voiced frames of the contour."""
    voiced = np.flatnonzero(contour.voiced_mask)
    if voiced.size == 0:
        raise FeatureExtractionError("HNR needs at least one voiced frame")
    hop, frame_len = contour.hop_samples, contour.frame_samples
    values = []
    for index in voiced:
        start = index * hop
        frame = clip.samples[start:start + frame_len]
        values.append(compute_hnr(frame, contour.values[index], clip.sample_rate, floor_db).db)
    return float(np.mean(values))


def f0_and_pitch_features(contour: F0Contour) -> Tuple[float, float]:
    """(mean voiced F0, median voiced F0) in Hz."""
    voiced = contour.voiced_values
    if voiced.size == 0:
        raise FeatureExtractionError("no voiced frames for fundamental frequency")
    return float(np.mean(voiced)), float(np.median(voiced))


def write_contour_csv(contour: F0Contour, path: Union[str, Path]) -> Path:
    path = Path(path)
    frame = pd.DataFrame({"frame_index": np.arange(len(contour)), "f0_hz": contour.values})
    frame.to_csv(path, index=False, na_rep="")
    return path
