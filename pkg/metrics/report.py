"""
MetricReport: JSON documents, comparison tables and CSV rows.

Tables use the column order Method | Size | MPJPE | FPS | FCE | FADE. With
several horizons the MPJPE and FADE cells read "a / b".
"""

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

from metrics.pose_metrics import fade, fce, format_metric
from utils.error_handler import DataError
from utils.file_manager import FileManager

logger = logging.getLogger(__name__)

TABLE_COLUMNS = ("Method", "Size", "MPJPE", "FPS", "FCE", "FADE")


@dataclass(frozen=True)
class MetricReport:
    """Errors of one model on one dataset, per horizon, plus speed and size."""

    model_name: str
    param_count: int
    horizons_ms: List[float]
    mpjpe_mm: List[float]
    vim: List[float]
    fade_mm: List[float]
    fps: Optional[float] = None
    fce_mm: Optional[float] = None
    sample_count: int = 0
    dataset: str = ""
    label: str = ""
    time_zero_error_mm: Optional[float] = None
    timing_excluded: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.horizons_ms)
        if not (len(self.mpjpe_mm) == len(self.vim) == len(self.fade_mm) == n):
            raise DataError(f"Report '{self.model_name}' has per-horizon lists of unequal length")
        values = list(self.mpjpe_mm) + list(self.vim) + list(self.fade_mm)
        values += [v for v in (self.fps, self.fce_mm) if v is not None]
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise DataError(f"Report '{self.model_name}' holds negative or non-finite values")

    @classmethod
    def build(cls, model_name: str, param_count: int, horizons_ms: Sequence[float],
              mpjpe_mm: Sequence[float], vim_values: Sequence[float], fps: Optional[float],
              sample_count: int, **kwargs) -> "MetricReport":
        """Derive FADE and FCE from the errors and (optional) FPS."""
        if fps is None:
            fade_mm = list(mpjpe_mm)
            fce_mm = None
        else:
            fade_mm = [fade(m, h, fps) for m, h in zip(mpjpe_mm, horizons_ms)]
            fce_mm = fce(fps)
        return cls(
            model_name=model_name,
            param_count=int(param_count),
            horizons_ms=[float(h) for h in horizons_ms],
            mpjpe_mm=[float(m) for m in mpjpe_mm],
            vim=[float(v) for v in vim_values],
            fade_mm=[float(f) for f in fade_mm],
            fps=None if fps is None else float(fps),
            fce_mm=fce_mm,
            sample_count=int(sample_count),
            **kwargs,
        )

    def without_timing(self) -> "MetricReport":
        """Copy with wall-clock values removed, for byte-reproducible reports."""
        return replace(self, fps=None, fce_mm=None, fade_mm=list(self.mpjpe_mm), timing_excluded=True)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricReport":
        try:
            return cls(**data)
        except TypeError as e:
            raise DataError(f"Malformed metric report: {e}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as e:
            raise DataError(f"Malformed metric report: {e}")

    def display_name(self) -> str:
        return f"{self.model_name} [{self.label}]" if self.label else self.model_name


def save_report(report: MetricReport, path: str):
    FileManager.write_json(path, report.to_dict())
    logger.info(f"Report for {report.display_name()} written to {path}")


def load_report(path: str) -> MetricReport:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"Cannot read metric report: {e}", path=path)
    return MetricReport.from_dict(data)


def format_size(param_count: int) -> str:
    if param_count <= 0:
        return "-"
    if param_count >= 1_000_000:
        return f"{param_count / 1e6:.2f}M"
    return f"{param_count / 1e3:.1f}K"


def _joined(values: Sequence[float]) -> str:
    return " / ".join(format_metric(v) for v in values)


def report_row(report: MetricReport) -> List[str]:
    fps_cell = "-" if report.fps is None else format_metric(report.fps, integer=True)
    fce_cell = format_metric(report.fce_mm, integer=True)
    fade_cell = "-" if report.fps is None else _joined(report.fade_mm)
    return [
        report.display_name(),
        format_size(report.param_count),
        _joined(report.mpjpe_mm),
        fps_cell,
        fce_cell,
        fade_cell,
    ]


def _disambiguate(reports: Sequence[MetricReport]) -> List[MetricReport]:
    seen: Dict[str, int] = {}
    unique = []
    for report in reports:
        name = report.display_name()
        seen[name] = seen.get(name, 0) + 1
        if seen[name] > 1:
            report = replace(report, model_name=f"{report.model_name} ({seen[name]})")
        unique.append(report)
    return unique


def compare_reports(reports: Sequence[MetricReport]) -> List[MetricReport]:
    """Order worst to best by FADE at the longest horizon; rename duplicates."""
    ordered = sorted(reports, key=lambda r: r.fade_mm[-1], reverse=True)
    return _disambiguate(ordered)


def format_table(reports: Sequence[MetricReport]) -> str:
    """Aligned text table, one row per report in the given order."""
    header = list(TABLE_COLUMNS)
    if reports and len(reports[0].horizons_ms) > 1:
        horizons = "/".join(f"{h:g}" for h in reports[0].horizons_ms)
        header[2] = f"MPJPE {horizons}"
        header[5] = f"FADE {horizons}"
    rows = [header] + [report_row(r) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]

    lines = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [cell.rjust(widths[i + 1]) for i, cell in enumerate(row[1:])]
        lines.append(" | ".join(cells))
        if n == 0:
            lines.append("-+-".join("-" * w for w in widths))
    return "\n".join(lines)


def write_table_csv(reports: Sequence[MetricReport], path: str):
    """CSV with the table's cells (display rounded)."""
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(TABLE_COLUMNS)
        for report in reports:
            writer.writerow(report_row(report))
