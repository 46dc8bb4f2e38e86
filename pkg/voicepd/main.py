import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from . import __version__
from .config import ExperimentConfig, MfccParams, PitchParams, SegmentationParams, get_settings, load_experiment_config
from .errors import ConfigError, VoicePdError
from .services.corpus_service import (
    extract_corpus,
    read_manifest,
    scan_italian_dataset,
    scan_mdvr_kcl,
    segment_corpus,
    write_manifest,
)
from .services.experiment_service import run_experiment, write_experiment_outputs
from .services.features import FeatureMatrix
from .services.report_service import read_run_record, render_comparison
from .utils.cache_utils import get_cache_stats
from .utils.fingerprint import build_fingerprint, config_hash

logger = logging.getLogger("voicepd")

SEGMENT_MANIFEST = "segments.csv"


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="voicepd", description="Parkinson's disease detection from voice recordings.")
    parser.add_argument("--version", action="version", version=f"voicepd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    manifest = sub.add_parser("manifest", help="build a manifest from a dataset directory tree")
    manifest.add_argument("--dataset", choices=["italian", "mdvr-kcl"], required=True)
    manifest.add_argument("--root", required=True, type=Path)
    manifest.add_argument("--out", required=True, type=Path)
    manifest.add_argument("--task", default="ReadText", help="MDVR-KCL task directory")
    manifest.add_argument("--all-recordings", action="store_true", help="Italian dataset: keep non-vowel files")

    segment = sub.add_parser("segment", help="split recordings at silences")
    segment.add_argument("--manifest", required=True, type=Path)
    segment.add_argument("--out", required=True, type=Path, help="output directory")
    segment.add_argument("--config", type=Path)
    segment.add_argument("--jobs", type=int)

    extract = sub.add_parser("extract", help="compute the 24 features per segment")
    extract.add_argument("--manifest", required=True, type=Path)
    extract.add_argument("--out", required=True, type=Path, help="feature CSV path")
    extract.add_argument("--config", type=Path)
    extract.add_argument("--jobs", type=int)

    evaluate = sub.add_parser("evaluate", help="grid search, hold-out and repeated k-fold evaluation")
    evaluate.add_argument("--features", "--manifest", dest="features", required=True, type=Path)
    evaluate.add_argument("--config", required=True, type=Path)
    evaluate.add_argument("--out", required=True, type=Path, help="output directory")
    evaluate.add_argument("--seed", type=int)
    evaluate.add_argument("--jobs", type=int)
    evaluate.add_argument("--grouping", choices=["segment", "subject"])

    report = sub.add_parser("report", help="compare run records")
    report.add_argument("records", nargs="+", type=Path)
    report.add_argument("--format", choices=["text", "csv"], default="text")
    report.add_argument("--out", type=Path)
    return parser


def _optional_config(path: Optional[Path]) -> Optional[ExperimentConfig]:
    return load_experiment_config(path) if path else None


def _jobs(value: Optional[int]) -> int:
    jobs = value if value is not None else get_settings().jobs
    if jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    return jobs


def cmd_manifest(args: argparse.Namespace) -> int:
    if args.dataset == "italian":
        entries = scan_italian_dataset(args.root, vowels_only=not args.all_recordings)
    else:
        entries = scan_mdvr_kcl(args.root, task=args.task)
    digest = build_fingerprint({"dataset": args.dataset, "task": args.task, "vowels_only": not args.all_recordings})
    write_manifest(entries, args.out, digest)
    logger.info("Wrote %d manifest rows to %s", len(entries), args.out)
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    config = _optional_config(args.config)
    params = config.segmentation if config else SegmentationParams()
    digest = config_hash(config) if config else config_hash(params)
    entries = read_manifest(args.manifest)
    rows = segment_corpus(entries, args.out, params, _jobs(args.jobs))
    out = write_manifest(rows, Path(args.out) / SEGMENT_MANIFEST, digest)
    logger.info("Wrote segment manifest %s (%d rows)", out, len(rows))
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    config = _optional_config(args.config)
    pitch = config.pitch if config else PitchParams()
    mfcc = config.mfcc if config else MfccParams()
    digest = config_hash(config) if config else build_fingerprint(
        {"pitch": pitch.model_dump(mode="json"), "mfcc": mfcc.model_dump(mode="json")}
    )
    entries = read_manifest(args.manifest)
    matrix, skipped = extract_corpus(entries, pitch, mfcc, _jobs(args.jobs))
    matrix.to_csv(args.out, digest)
    logger.info("Wrote %d feature rows to %s (%d segments skipped)", matrix.n_rows, args.out, len(skipped))
    logger.debug("DSP cache in the main process: %s", get_cache_stats())
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = load_experiment_config(args.config).with_overrides(seed=args.seed, grouping=args.grouping)
    jobs = _jobs(args.jobs)
    matrix = FeatureMatrix.read_csv(args.features)
    record = run_experiment(matrix, config, jobs)
    paths = write_experiment_outputs(record, args.out)
    logger.info("Run %s written to %s (%s)", record.run_id, args.out, ", ".join(sorted(paths)))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    records = [read_run_record(path) for path in args.records]
    text = render_comparison(records, args.format)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "manifest": cmd_manifest,
    "segment": cmd_segment,
    "extract": cmd_extract,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    try:
        settings = get_settings()
    except ValidationError as exc:
        logging.basicConfig(level=logging.INFO)
        logger.error("Invalid environment settings: %s", exc)
        return ConfigError.exit_code
    logging.basicConfig(level=settings.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    except VoicePdError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except Exception:
        logger.exception("Internal error")
        return 3


if __name__ == "__main__":
    sys.exit(main())
