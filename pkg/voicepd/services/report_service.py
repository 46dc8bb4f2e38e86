"""Metric tables, run records and cross-run comparison."""
import io
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import orjson
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .. import __version__
from ..errors import ReportError
from ..models.families import FAMILIES
from ..utils.fingerprint import provenance_line
from ..utils.report_strings import METRIC_NAMES, get_feature_set_label, get_model_label, get_string
from ..models.grid_search import GridCell
from .evaluation import CvReport, MetricSet

logger = logging.getLogger("voicepd.report")

# feature set -> family -> metric -> fraction
MetricTable = Dict[str, Dict[str, Dict[str, float]]]


class CvSummary(BaseModel):
    mean: Dict[str, float]
    std: Dict[str, float]
    n_folds: int
    degenerate: Dict[str, int] = Field(default_factory=dict)


class GridRecord(BaseModel):
    best_params: Dict[str, Any]
    best_accuracy: Optional[float] = None
    bypassed: bool = False
    cells: List[Dict[str, Any]] = Field(default_factory=list)


class FeatureSetRecord(BaseModel):
    columns: List[str]
    selected: Optional[List[str]] = None
    # null marks an unbounded score (zero within-class variance).
    anova_scores: Optional[Dict[str, Optional[float]]] = None


class RunRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    run_id: str
    tool_version: str = __version__
    config_hash: str
    dataset: str
    config: Dict[str, Any]
    class_counts: Dict[str, int]
    feature_sets: Dict[str, FeatureSetRecord] = Field(default_factory=dict)
    grid_search: Dict[str, Dict[str, GridRecord]] = Field(default_factory=dict)
    holdout: Dict[str, Dict[str, Dict[str, float]]] = Field(default_factory=dict)
    cv: Dict[str, Dict[str, CvSummary]] = Field(default_factory=dict)
    folds: Dict[str, Dict[str, List[Dict[str, Any]]]] = Field(default_factory=dict)
    controls: Dict[str, Dict[str, CvSummary]] = Field(default_factory=dict)

    def feature_set_order(self) -> List[str]:
        """Feature-set labels in configured order; JSON round trips sort the keys."""
        configured = [
            f"selected_{fs.get('k')}" if fs.get("name") == "selected_k" else str(fs.get("name"))
            for fs in self.config.get("feature_sets", [])
        ]
        rank = {label: index for index, label in enumerate(configured)}
        return sorted(self.cv, key=lambda label: (rank.get(label, len(rank)), label))

    def table(self, stat: str = "mean") -> MetricTable:
        return {
            fs: {family: dict(getattr(summary, stat)) for family, summary in self.cv[fs].items()}
            for fs in self.feature_set_order()
        }

    @property
    def title(self) -> str:
        return get_string("block_header", self.run_id, self.dataset)


def summarise(report: CvReport) -> CvSummary:
    return CvSummary(
        mean=report.mean(), std=report.std(), n_folds=report.n_folds, degenerate=report.degenerate_counts()
    )


def fold_rows(report: CvReport) -> List[Dict[str, Any]]:
    return [
        {
            "repeat": result.repeat,
            "fold": result.fold,
            "tp": result.counts.tp,
            "fp": result.counts.fp,
            "tn": result.counts.tn,
            "fn": result.counts.fn,
            **result.metrics.as_dict(),
            "degenerate": list(result.metrics.degenerate),
            "params": result.params,
        }
        for result in report.folds
    ]


def grid_record(best_params: Dict[str, Any], cells: Sequence[GridCell], best_accuracy: Optional[float], bypassed: bool) -> GridRecord:
    return GridRecord(
        best_params=best_params,
        best_accuracy=best_accuracy,
        bypassed=bypassed,
        cells=[{"params": c.params, "mean_accuracy": c.mean_accuracy, "error": c.error} for c in cells],
    )


def finite_or_none(scores: Mapping[str, float]) -> Dict[str, Optional[float]]:
    return {name: (float(value) if math.isfinite(value) else None) for name, value in scores.items()}


def table_from_reports(reports: Sequence[CvReport], stat: str = "mean") -> MetricTable:
    table: MetricTable = {}
    for report in reports:
        values = report.mean() if stat == "mean" else report.std()
        table.setdefault(report.feature_set, {})[report.family] = values
    return table


def table_from_metrics(results: Mapping[str, Mapping[str, MetricSet]]) -> MetricTable:
    return {fs: {family: m.as_dict() for family, m in by_family.items()} for fs, by_family in results.items()}


def _percent(value: float) -> str:
    return f"{value * 100.0:.1f}"


def _ordered_families(table: MetricTable) -> List[str]:
    present = {family for by_family in table.values() for family in by_family}
    return [family for family in FAMILIES if family in present]


def render_report(
    table: Union[MetricTable, Sequence[CvReport]],
    fmt: str = "text",
    config_digest: Optional[str] = None,
    title: Optional[str] = None,
    stat: str = "mean",
) -> str:
    """Feature set x metric x model grid as CSV or aligned text, percentages to one decimal."""
    if not isinstance(table, Mapping):
        table = table_from_reports(table, stat)
    if not table:
        raise ReportError("nothing to report")
    families = _ordered_families(table)
    header_lines = []
    if config_digest:
        header_lines.append(provenance_line(config_digest))
    if title:
        header_lines.append(title)

    if fmt == "csv":
        rows = []
        for fs, by_family in table.items():
            for metric in METRIC_NAMES:
                row = {"feature_set": fs, "metric": metric}
                for family in families:
                    value = by_family.get(family, {}).get(metric)
                    row[get_model_label(family)] = "" if value is None else _percent(value)
                rows.append(row)
        buffer = io.StringIO()
        columns = ["feature_set", "metric"] + [get_model_label(family) for family in families]
        pd.DataFrame(rows, columns=columns).to_csv(buffer, index=False, lineterminator="\n")
        return "".join(line + "\n" for line in header_lines) + buffer.getvalue()

    if fmt != "text":
        raise ReportError(f"unknown report format {fmt!r}")
    label_width = max(len(get_string(metric)) for metric in METRIC_NAMES) + 2
    column_width = 7
    lines = list(header_lines)
    for fs, by_family in table.items():
        if len(lines) > len(header_lines):
            lines.append("")
        lines.append(get_feature_set_label(fs))
        lines.append("Metric".ljust(label_width) + "".join(get_model_label(f).rjust(column_width) for f in families))
        for metric in METRIC_NAMES:
            cells = []
            for family in families:
                value = by_family.get(family, {}).get(metric)
                cells.append(("-" if value is None else _percent(value)).rjust(column_width))
            lines.append(get_string(metric).ljust(label_width) + "".join(cells))
    return "\n".join(lines) + "\n"


def render_record(record: RunRecord, fmt: str = "text", stat: str = "mean") -> str:
    return render_report(record.table(stat), fmt, record.config_hash, record.title)


def render_comparison(records: Sequence[RunRecord], fmt: str = "text") -> str:
    """One block per record, each identical to that record's own report."""
    if not records:
        raise ReportError("no run records to compare")
    seen = set()
    for record in records:
        if record.run_id in seen:
            raise ReportError(f"duplicate run id {record.run_id!r}")
        seen.add(record.run_id)
    return "\n".join(render_record(record, fmt) for record in records)


def write_run_record(record: RunRecord, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = record.model_dump(mode="json")
    path.write_bytes(orjson.dumps(payload, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2) + b"\n")
    return path


def read_run_record(path: Union[str, Path]) -> RunRecord:
    path = Path(path)
    try:
        payload = orjson.loads(path.read_bytes())
    except (OSError, orjson.JSONDecodeError) as exc:
        raise ReportError(f"cannot read run record {path}: {exc}") from exc
    try:
        return RunRecord.model_validate(payload)
    except ValidationError as exc:
        raise ReportError(f"{path} is not a valid run record: {exc}") from exc
