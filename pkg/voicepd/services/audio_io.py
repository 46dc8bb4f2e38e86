"""WAV decoding, mono normalisation and silence-based utterance segmentation."""
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.io import wavfile

from ..errors import AudioDecodeError, AudioReadError, PreconditionError

logger = logging.getLogger("voicepd.audio_io")

PathLike = Union[str, Path]


@dataclass(frozen=True)
class AudioClip:
    """Mono float samples in [-1, 1] with their sample rate."""

    samples: np.ndarray
    sample_rate: int
    source_path: str = ""

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise PreconditionError("AudioClip samples must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise PreconditionError(f"sample_rate must be positive, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples)):
            raise PreconditionError("AudioClip samples must be finite")
        if samples.size and np.max(np.abs(samples)) > 1.0:
            raise PreconditionError("AudioClip samples must lie within [-1, 1]")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def slice(self, segment: "SegmentSpec") -> "AudioClip":
        return AudioClip(
            samples=self.samples[segment.start_sample:segment.end_sample],
            sample_rate=self.sample_rate,
            source_path=self.source_path,
        )


@dataclass(frozen=True, order=True)
class SegmentSpec:
    start_sample: int
    end_sample: int

    def __post_init__(self) -> None:
        if not 0 <= self.start_sample < self.end_sample:
            raise PreconditionError(f"invalid segment [{self.start_sample}, {self.end_sample})")

    @property
    def length(self) -> int:
        return self.end_sample - self.start_sample


@dataclass
class _RiffInfo:
    format_tag: int
    channels: int
    bits_per_sample: int


_FORMAT_NAMES = {
    0x0001: "PCM",
    0x0003: "IEEE_FLOAT",
    0x0006: "A-LAW",
    0x0007: "MU-LAW",
    0x0011: "IMA-ADPCM",
    0x0055: "MPEG-LAYER3",
    0xFFFE: "EXTENSIBLE",
}


def _read_fmt_chunk(path: Path) -> _RiffInfo:
    """Parse the RIFF header far enough to name the encoding."""
    with path.open("rb") as fh:
        header = fh.read(12)
        if len(header) < 12 or header[:4] not in (b"RIFF", b"RIFX") or header[8:12] != b"WAVE":
            raise AudioReadError(f"{path}: not a RIFF/WAVE file")
        order = "<" if header[:4] == b"RIFF" else ">"
        while True:
            chunk = fh.read(8)
            if len(chunk) < 8:
                raise AudioReadError(f"{path}: truncated file, no fmt chunk")
            chunk_id = chunk[:4]
            size = int(np.frombuffer(chunk[4:8], dtype=f"{order}u4")[0])
            if chunk_id == b"fmt ":
                body = fh.read(size)
                if len(body) < 16:
                    raise AudioReadError(f"{path}: truncated fmt chunk")
                tag, channels = np.frombuffer(body[:4], dtype=f"{order}u2")
                bits = int(np.frombuffer(body[14:16], dtype=f"{order}u2")[0])
                if tag == 0xFFFE and len(body) >= 26:
                    # WAVE_FORMAT_EXTENSIBLE: real tag is the first two bytes of the subformat GUID.
                    tag = np.frombuffer(body[24:26], dtype=f"{order}u2")[0]
                return _RiffInfo(format_tag=int(tag), channels=int(channels), bits_per_sample=bits)
            fh.seek(size + (size & 1), 1)


def _format_label(info: _RiffInfo) -> str:
    name = _FORMAT_NAMES.get(info.format_tag, "UNKNOWN")
    return f"format tag 0x{info.format_tag:04X} {name}, {info.bits_per_sample}-bit"


def _to_float(data: np.ndarray) -> np.ndarray:
    """Scale integer PCM by the signed maximum of its container."""
    if data.dtype == np.uint8:
        return (data.astype(np.float64) - 128.0) / 128.0
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32768.0
    if data.dtype == np.int32:
        # scipy returns 24-bit PCM left-aligned in int32, so one scale covers both.
        return data.astype(np.float64) / 2147483648.0
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64)
    raise TypeError(str(data.dtype))


def load_wav(path: PathLike) -> AudioClip:
    """Decode a RIFF/WAVE file into a mono AudioClip.

    Integer PCM (8/16/24/32-bit) is scaled by its signed full scale and
    32-bit float is taken as is (clipped to [-1, 1]). Multi-channel frames
    are averaged to mono; the sample rate is preserved.
    """
    path = Path(path)
    if not path.is_file():
        raise AudioReadError(f"{path}: file not found")
    info = _read_fmt_chunk(path)
    supported = (info.format_tag == 0x0001 and info.bits_per_sample in (8, 16, 24, 32)) or (
        info.format_tag == 0x0003 and info.bits_per_sample == 32
    )
    if not supported:
        raise AudioDecodeError(str(path), _format_label(info))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            sample_rate, data = wavfile.read(str(path))
    except (ValueError, EOFError, OSError) as exc:
        raise AudioReadError(f"{path}: cannot read samples ({exc})") from exc
    try:
        samples = _to_float(np.asarray(data))
    except TypeError as exc:
        raise AudioDecodeError(str(path), _format_label(info)) from exc
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    samples = np.clip(np.nan_to_num(samples, nan=0.0, posinf=1.0, neginf=-1.0), -1.0, 1.0)
    logger.debug("Loaded %s: %d samples at %d Hz", path, samples.size, sample_rate)
    return AudioClip(samples=samples, sample_rate=int(sample_rate), source_path=str(path))


def write_wav(clip: AudioClip, path: PathLike) -> Path:
    """Write ``clip`` as 16-bit PCM."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pcm = np.round(clip.samples * 32768.0)
    pcm = np.clip(pcm, -32768, 32767).astype(np.int16)
    wavfile.write(str(path), clip.sample_rate, pcm)
    return path


def _frames(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    if samples.size < frame_len:
        return np.pad(samples, (0, frame_len - samples.size))[None, :]
    return sliding_window_view(samples, frame_len)[::hop]


def frame_rms(clip: AudioClip, frame_s: float = 0.025, hop_s: float = 0.010) -> np.ndarray:
    """RMS of each analysis frame; a clip shorter than one frame is zero-padded to one."""
    frame_len = max(1, int(round(frame_s * clip.sample_rate)))
    hop = max(1, int(round(hop_s * clip.sample_rate)))
    if len(clip) == 0:
        return np.zeros(0)
    frames = _frames(clip.samples, frame_len, hop)
    return np.sqrt(np.mean(np.square(frames), axis=1))


def _runs(mask: np.ndarray) -> List[tuple]:
    """Inclusive (first, last) index pairs of the True runs in ``mask``."""
    if mask.size == 0:
        return []
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    return list(zip(starts.tolist(), ends.tolist()))


def segment_by_silence(
    clip: AudioClip,
    silence_rms_threshold: float = 0.01,
    min_silence_s: float = 0.5,
    min_segment_s: float = 0.5,
    frame_s: float = 0.025,
    hop_s: float = 0.010,
) -> List[SegmentSpec]:
    """Split ``clip`` at silent gaps of at least ``min_silence_s``.

    A gap is a run of frames whose RMS stays below ``silence_rms_threshold``;
    its edges are then widened, by at most one hop, to the last and first
    samples below the threshold. Regions between gaps that hold no voiced frame, or that are
    shorter than ``min_segment_s``, are dropped.
    """
    if silence_rms_threshold <= 0 or min_silence_s <= 0 or min_segment_s <= 0:
        raise PreconditionError("segmentation thresholds must be positive")
    length = len(clip)
    if length == 0:
        return []
    sr = clip.sample_rate
    frame_len = max(1, int(round(frame_s * sr)))
    hop = max(1, int(round(hop_s * sr)))
    rms = frame_rms(clip, frame_s, hop_s)
    silent = rms < silence_rms_threshold
    n_frames = rms.size
    min_silence = min_silence_s * sr

    quiet = np.abs(clip.samples) < silence_rms_threshold
    cuts = []
    for first, last in _runs(silent):
        start = first * hop
        end = length if last == n_frames - 1 else min(length, last * hop + frame_len)
        # Frame edges sit up to one hop inside the true gap; extend them sample by sample.
        floor, ceiling = max(0, start - hop), min(length, end + hop)
        while start > floor and quiet[start - 1]:
            start -= 1
        while end < ceiling and quiet[end]:
            end += 1
        if end - start >= min_silence:
            cuts.append((start, end))

    regions = []
    cursor = 0
    for start, end in cuts:
        if start > cursor:
            regions.append((cursor, start))
        cursor = max(cursor, end)
    if cursor < length:
        regions.append((cursor, length))

    frame_starts = np.arange(n_frames) * hop
    voiced_starts = frame_starts[~silent]
    min_segment = min_segment_s * sr
    segments = []
    for start, end in regions:
        has_voice = np.any((voiced_starts >= start) & (voiced_starts < end))
        if not has_voice:
            continue
        if end - start < min_segment:
            logger.debug("Dropping %.3fs region at %d (below min_segment_s)", (end - start) / sr, start)
            continue
        segments.append(SegmentSpec(int(start), int(end)))
    logger.info(
        "Segmented %s into %d segments (%d silent gaps)", clip.source_path or "<clip>", len(segments), len(cuts)
    )
    return segments


def write_segments(
    clip: AudioClip,
    segments: List[SegmentSpec],
    out_dir: PathLike,
    stem: Optional[str] = None,
) -> List[Path]:
    """Write each segment to ``<stem>_segNNN.wav`` under ``out_dir``."""
    out_dir = Path(out_dir)
    stem = stem or (Path(clip.source_path).stem if clip.source_path else "clip")
    paths = []
    for index, segment in enumerate(segments):
        paths.append(write_wav(clip.slice(segment), out_dir / f"{stem}_seg{index:03d}.wav"))
    return paths
