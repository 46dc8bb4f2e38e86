"""Cycle-to-cycle perturbation measures (jitter and shimmer variants).

Neighbour-averaged variants (rap, ppq5, apq3, apq5) are evaluated on interior
cycles only, where every neighbour exists, and averaged over the number of
interior terms.
"""
import logging
from typing import Dict

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import InsufficientCyclesError
from .pitch import PeriodTrack

logger = logging.getLogger("voicepd.perturbation")

MEASURE_NAMES = (
    "jitter_absolute",
    "jitter_relative",
    "jitter_rap",
    "jitter_ppq5",
    "shimmer_db",
    "shimmer_relative",
    "shimmer_apq3",
    "shimmer_apq5",
)


def _require(values: np.ndarray, required: int, variant: str) -> None:
    if values.size < required:
        raise InsufficientCyclesError(variant, required, int(values.size))


def _mean_abs_diff(values: np.ndarray) -> float:
    return float(np.mean(np.abs(np.diff(values))))


def _neighbour_deviation(values: np.ndarray, width: int, variant: str) -> float:
    """Mean |x_i - mean(window centred on i)| over interior i, as % of mean(x)."""
    _require(values, width, variant)
    mean = float(np.mean(values))
    if mean <= 0:
        raise InsufficientCyclesError(variant, width, int(values.size), "mean is not positive")
    half = width // 2
    local_means = sliding_window_view(values, width).mean(axis=1)
    centres = values[half:values.size - half]
    return float(np.mean(np.abs(centres - local_means)) / mean * 100.0)


def jitter_absolute(track: PeriodTrack) -> float:
    """Mean absolute difference of consecutive periods, in seconds."""
    _require(track.periods, 2, "jitter_absolute")
    return _mean_abs_diff(track.periods)


def jitter_relative(track: PeriodTrack) -> float:
    _require(track.periods, 2, "jitter_relative")
    mean = float(np.mean(track.periods))
    if mean <= 0:
        raise InsufficientCyclesError("jitter_relative", 2, track.count, "mean period is not positive")
    return _mean_abs_diff(track.periods) / mean * 100.0


def jitter_rap(track: PeriodTrack) -> float:
    return _neighbour_deviation(track.periods, 3, "jitter_rap")


def jitter_ppq5(track: PeriodTrack) -> float:
    return _neighbour_deviation(track.periods, 5, "jitter_ppq5")


def shimmer_db(track: PeriodTrack) -> float:
    """Mean |20*log10(A_{i+1}/A_i)| in dB."""
    amplitudes = track.amplitudes
    _require(amplitudes, 2, "shimmer_db")
    if np.any(amplitudes <= 0):
        raise InsufficientCyclesError(
            "shimmer_db", 2, track.count, "non-positive cycle amplitude; the cycle tracker failed"
        )
    ratios = amplitudes[1:] / amplitudes[:-1]
    return float(np.mean(np.abs(20.0 * np.log10(ratios))))


def shimmer_relative(track: PeriodTrack) -> float:
    _require(track.amplitudes, 2, "shimmer_relative")
    mean = float(np.mean(track.amplitudes))
    if mean <= 0:
        raise InsufficientCyclesError("shimmer_relative", 2, track.count, "mean amplitude is not positive")
    return _mean_abs_diff(track.amplitudes) / mean * 100.0


def shimmer_apq3(track: PeriodTrack) -> float:
    return _neighbour_deviation(track.amplitudes, 3, "shimmer_apq3")


def shimmer_apq5(track: PeriodTrack) -> float:
    return _neighbour_deviation(track.amplitudes, 5, "shimmer_apq5")


_MEASURES = {
    "jitter_absolute": jitter_absolute,
    "jitter_relative": jitter_relative,
    "jitter_rap": jitter_rap,
    "jitter_ppq5": jitter_ppq5,
    "shimmer_db": shimmer_db,
    "shimmer_relative": shimmer_relative,
    "shimmer_apq3": shimmer_apq3,
    "shimmer_apq5": shimmer_apq5,
}


def perturbation_report(track: PeriodTrack) -> Dict[str, float]:
    """All eight measures in canonical order."""
    report = {name: _MEASURES[name](track) for name in MEASURE_NAMES}
    logger.debug("Perturbation report over %d cycles: %s", track.count, report)
    return report
