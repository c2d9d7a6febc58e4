"""Experiment reports and their JSON / CSV serialisations."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    """Nine significant digits, '.' separator, empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.9g}"


@dataclass(frozen=True)
class Statistic:
    name: str
    empirical: float
    reference: float | None = None
    std_error: float | None = None

    @property
    def abs_error(self) -> float | None:
        if self.reference is None:
            return None
        return abs(self.empirical - self.reference)


@dataclass(frozen=True)
class CdfPoint:
    x: float
    empirical_cdf: float
    reference_cdf: float


@dataclass
class ExperimentReport:
    kind: str
    config: dict
    statistics: list[Statistic] = field(default_factory=list)
    cdf_grid: list[CdfPoint] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def add(self, name, empirical, reference=None, std_error=None) -> None:
        self.statistics.append(Statistic(name, float(empirical),
                                         None if reference is None else float(reference),
                                         None if std_error is None else float(std_error)))

    def __getitem__(self, name: str) -> Statistic:
        for s in self.statistics:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        stats = []
        for s in self.statistics:
            d = asdict(s)
            d["abs_error"] = s.abs_error
            stats.append(d)
        return {"kind": self.kind, "config": self.config, "statistics": stats,
                "cdf_grid": [asdict(p) for p in self.cdf_grid], "warnings": list(self.warnings)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def statistics_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["statistic", "empirical", "reference", "abs_error", "std_error"])
        for s in self.statistics:
            w.writerow([s.name, fmt(s.empirical), fmt(s.reference), fmt(s.abs_error),
                        fmt(s.std_error)])
        return buf.getvalue()

    def cdf_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "empirical_cdf", "reference_cdf"])
        for p in self.cdf_grid:
            w.writerow([fmt(p.x), fmt(p.empirical_cdf), fmt(p.reference_cdf)])
        return buf.getvalue()

    def write(self, path: str | Path, format: str = "json") -> list[Path]:
        """Write the report; CSV output adds a ``<stem>_cdf.csv`` companion for the grid."""
        path = Path(path)
        if format == "json":
            path.write_text(self.to_json())
            return [path]
        path.write_text(self.statistics_csv())
        written = [path]
        if self.cdf_grid:
            cdf_path = path.with_name(path.stem + "_cdf.csv")
            cdf_path.write_text(self.cdf_csv())
            written.append(cdf_path)
        return written
