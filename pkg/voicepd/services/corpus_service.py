"""Dataset manifests, dataset scanners and the corpus-level segment/extract passes."""
import logging
import re
from functools import partial
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from ..config import MfccParams, PitchParams, SegmentationParams
from ..errors import DataError, FeatureExtractionError
from ..utils.fingerprint import provenance_line
from ..utils.parallel import run_ordered
from .audio_io import load_wav, segment_by_silence, write_segments
from .features import LABEL_CODES, FeatureExtractor, FeatureMatrix, FeatureVector, SkipRecord
from .validators import Validator

logger = logging.getLogger("voicepd.corpus")

PathLike = Union[str, Path]

BASE_COLUMNS = ("path", "label", "subject_id")
SEGMENT_COLUMNS = ("source_path", "segment_index", "start_sample", "end_sample")

_MDVR_SUBJECT = re.compile(r"^(ID\d+)", re.IGNORECASE)


class ManifestEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: str
    label: str
    subject_id: str
    source_path: Optional[str] = None
    segment_index: Optional[int] = None
    start_sample: Optional[int] = None
    end_sample: Optional[int] = None

    @field_validator("label")
    @classmethod
    def _label(cls, value: str) -> str:
        value = value.strip().upper()
        if not Validator.is_valid_label(value):
            raise ValueError(f"label must be PD or HC, got {value!r}")
        return value

    @field_validator("subject_id")
    @classmethod
    def _subject(cls, value: str) -> str:
        value = value.strip()
        if not Validator.is_valid_subject_id(value):
            raise ValueError(f"invalid subject_id {value!r}")
        return value

    @property
    def label_code(self) -> int:
        return LABEL_CODES[self.label]

    @property
    def is_segment(self) -> bool:
        return self.segment_index is not None


def _resolve(path: str, base: Path) -> str:
    candidate = Path(path)
    if not candidate.is_absolute():
        candidate = base / candidate
    return str(candidate)


def read_manifest(path: PathLike) -> List[ManifestEntry]:
    """Rows of a ``path,label,subject_id`` CSV; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest {path} not found")
    with path.open("r", encoding="utf-8") as fh:
        first = fh.readline()
    skip = 1 if first.startswith("#") else 0
    try:
        frame = pd.read_csv(path, skiprows=skip, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise DataError(f"manifest {path} is empty (no header)") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot parse manifest {path}: {exc}") from exc
    missing = [column for column in BASE_COLUMNS if column not in frame.columns]
    if missing:
        raise DataError(f"manifest {path} lacks columns: {', '.join(missing)}")
    base = path.parent
    entries = []
    for row_number, row in enumerate(frame.to_dict(orient="records"), start=1):
        data = {key: value for key, value in row.items() if value != ""}
        data["path"] = _resolve(data.get("path", ""), base)
        if "source_path" in data:
            data["source_path"] = _resolve(data["source_path"], base)
        try:
            entries.append(ManifestEntry.model_validate(data))
        except ValidationError as exc:
            raise DataError(f"manifest {path} row {row_number}: {exc.errors()[0]['msg']}") from exc
    logger.info("Read %d manifest rows from %s", len(entries), path)
    return entries


def write_manifest(entries: Sequence[ManifestEntry], path: PathLike, config_digest: str) -> Path:
    """Write entries; paths under the manifest directory are stored relative to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()
    segmented = any(entry.is_segment for entry in entries)
    columns = list(BASE_COLUMNS) + (list(SEGMENT_COLUMNS) if segmented else [])

    def relative(value: Optional[str]) -> str:
        if value is None:
            return ""
        resolved = Path(value).resolve()
        try:
            return resolved.relative_to(base).as_posix()
        except ValueError:
            return str(resolved)

    rows = []
    for entry in entries:
        row = {"path": relative(entry.path), "label": entry.label, "subject_id": entry.subject_id}
        if segmented:
            row.update(
                source_path=relative(entry.source_path),
                segment_index="" if entry.segment_index is None else entry.segment_index,
                start_sample="" if entry.start_sample is None else entry.start_sample,
                end_sample="" if entry.end_sample is None else entry.end_sample,
            )
        rows.append(row)
    body = pd.DataFrame(rows, columns=columns).to_csv(index=False, lineterminator="\n")
    path.write_text(provenance_line(config_digest) + "\n" + body, encoding="utf-8")
    return path


def scan_italian_dataset(root: PathLike, vowels_only: bool = True) -> List[ManifestEntry]:
    """Group directory -> label, speaker directory -> subject, ``V*`` files -> sustained vowels."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    entries = []
    for wav in sorted(root.rglob("*.wav"), key=lambda p: p.as_posix()):
        parts = wav.relative_to(root).parts
        if len(parts) < 2:
            logger.warning("Skipping %s: not inside a group directory", wav)
            continue
        if vowels_only and not wav.name.upper().startswith("V"):
            continue
        group = parts[0]
        label = "PD" if "parkinson" in group.lower() else "HC"
        speaker = parts[-2] if len(parts) >= 3 else wav.stem
        entries.append(ManifestEntry(path=str(wav), label=label, subject_id=_subject_token(speaker)))
    logger.info("Italian dataset scan found %d recordings under %s", len(entries), root)
    return entries


def scan_mdvr_kcl(root: PathLike, task: str = "ReadText") -> List[ManifestEntry]:
    """``PD``/``HC`` directory -> label, ``IDnn`` file-name prefix -> subject."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    base = root / task if (root / task).is_dir() else root
    entries = []
    for wav in sorted(base.rglob("*.wav"), key=lambda p: p.as_posix()):
        parents = [part.upper() for part in wav.relative_to(base).parts[:-1]]
        label = next((part for part in reversed(parents) if part in ("PD", "HC")), None)
        if label is None:
            logger.warning("Skipping %s: no PD/HC directory", wav)
            continue
        match = _MDVR_SUBJECT.match(wav.stem)
        if not match:
            logger.warning("Skipping %s: file name does not start with a subject id", wav)
            continue
        entries.append(ManifestEntry(path=str(wav), label=label, subject_id=match.group(1).upper()))
    logger.info("MDVR-KCL scan found %d recordings under %s", len(entries), base)
    return entries


def _subject_token(name: str) -> str:
    token = re.sub(r"[^A-Za-z0-9_.\- ]", "_", name).strip()
    return token.lstrip("_.- ") or "unknown"


def _unique_stems(entries: Sequence[ManifestEntry]) -> List[str]:
    stems, seen = [], set()
    for entry in entries:
        stem = Path(entry.path).stem
        if stem in seen:
            stem = f"{entry.subject_id}_{stem}".replace(" ", "_")
        seen.add(stem)
        stems.append(stem)
    return stems


def _segment_one(item: Tuple[ManifestEntry, str], out_dir: str, params: SegmentationParams) -> List[ManifestEntry]:
    entry, stem = item
    clip = load_wav(entry.path)
    segments = segment_by_silence(
        clip,
        params.silence_rms_threshold,
        params.min_silence_s,
        params.min_segment_s,
        params.frame_s,
        params.hop_s,
    )
    paths = write_segments(clip, segments, out_dir, stem)
    return [
        ManifestEntry(
            path=str(written),
            label=entry.label,
            subject_id=entry.subject_id,
            source_path=entry.path,
            segment_index=index,
            start_sample=segment.start_sample,
            end_sample=segment.end_sample,
        )
        for index, (segment, written) in enumerate(zip(segments, paths))
    ]


def segment_corpus(
    entries: Sequence[ManifestEntry],
    out_dir: PathLike,
    params: Optional[SegmentationParams] = None,
    jobs: int = 1,
) -> List[ManifestEntry]:
    """Split every recording at silences; rows come back in manifest order."""
    params = params or SegmentationParams()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    items = list(zip(entries, _unique_stems(entries)))
    worker = partial(_segment_one, out_dir=str(out_dir), params=params)
    per_file = run_ordered(worker, items, jobs)
    rows = [row for rows in per_file for row in rows]
    for entry, produced in zip(entries, per_file):
        if not produced:
            logger.warning("No segments in %s", entry.path)
    logger.info("Segmented %d recordings into %d segments", len(entries), len(rows))
    return rows


def _extract_one(
    entry: ManifestEntry, pitch: PitchParams, mfcc: MfccParams
) -> Tuple[Optional[FeatureVector], Optional[str]]:
    clip = load_wav(entry.path)
    try:
        return FeatureExtractor(pitch, mfcc).extract(clip), None
    except FeatureExtractionError as exc:
        return None, str(exc)


def extract_corpus(
    entries: Sequence[ManifestEntry],
    pitch: Optional[PitchParams] = None,
    mfcc: Optional[MfccParams] = None,
    jobs: int = 1,
) -> Tuple[FeatureMatrix, List[SkipRecord]]:
    """Feature rows for every usable segment plus a skip record for every other one."""
    worker = partial(_extract_one, pitch=pitch or PitchParams(), mfcc=mfcc or MfccParams())
    results = run_ordered(worker, list(entries), jobs)
    vectors, kept, skipped = [], [], []
    for entry, (vector, reason) in zip(entries, results):
        if vector is None:
            logger.warning("Skipping %s: %s", entry.path, reason)
            skipped.append(SkipRecord(path=entry.path, reason=reason or "", segment_index=entry.segment_index or 0))
            continue
        vectors.append(vector)
        kept.append(entry)
    matrix = FeatureMatrix.from_vectors(
        vectors,
        labels=[entry.label_code for entry in kept],
        subject_ids=[entry.subject_id for entry in kept],
        source_paths=[entry.source_path or entry.path for entry in kept],
        segment_indices=[entry.segment_index or 0 for entry in kept],
    )
    logger.info("Extracted %d feature rows (%d skipped)", matrix.n_rows, len(skipped))
    return matrix, skipped
