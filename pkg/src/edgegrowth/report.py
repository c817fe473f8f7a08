"""Result records and their CSV / JSON emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .spectral import SCAN_COLUMNS

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2

METRIC_COLUMNS = ("experiment", "metric", "value", "threshold", "passed")


@dataclass(frozen=True)
class Check:
    """One thresholded quantity: passes when ``value <= threshold`` (or ``==`` when exact)."""
    metric: str
    value: float
    threshold: float
    exact: bool = False

    @property
    def passed(self) -> bool:
        if isinstance(self.value, float) and math.isnan(self.value):
            return False
        return self.value == self.threshold if self.exact else self.value <= self.threshold


@dataclass
class ResultRecord:
    experiment: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    values: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return EXIT_PASS if self.passed else EXIT_FAIL

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_json(self) -> dict:
        out = {
            "experiment": self.experiment,
            "passed": self.passed,
            "config": self.config,
            "checks": [dict(metric=c.metric, value=_clean(c.value), threshold=c.threshold,
                            passed=c.passed) for c in self.checks],
            "values": _clean(self.values),
            "wall_clock": self.wall_clock,
        }
        if self.rows:
            out["columns"] = list(SCAN_COLUMNS)
            out["rows"] = [list(r) for r in self.rows]
        if self.fits:
            out["fit"] = _clean(self.fits)
        return out


def _clean(v):
    """JSON-safe copy: non-finite floats become strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def record_csv(record: ResultRecord) -> str:
    """Scan rows with the scan header, otherwise one metric per line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if record.rows:
        w.writerow(SCAN_COLUMNS)
        for r in record.rows:
            w.writerow([_fmt(x) for x in r])
    else:
        w.writerow(METRIC_COLUMNS)
        for c in record.checks:
            w.writerow([record.experiment, c.metric, _fmt(c.value), _fmt(c.threshold),
                        _fmt(c.passed)])
    return buf.getvalue()


def render(record: ResultRecord, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n"
    return record_csv(record)


def emit_report(records: Sequence[ResultRecord], path: str | None = None) -> tuple[dict, int]:
    """Aggregate JSON report keyed by experiment id, plus a plot-ready CSV next to it.

    Returns the report and the combined exit code.  With ``path`` the JSON is
    written there and the CSV to the same stem with a ``.csv`` suffix.
    """
    if not records:
        raise ValueError("emit_report needs at least one record")
    ordered = sorted(records, key=lambda r: r.experiment)
    report = {"sections": {r.experiment: r.to_json() for r in ordered}}
    failing = {r.experiment: [dict(metric=c.metric, value=_clean(c.value),
                                   threshold=c.threshold) for c in r.failures()]
               for r in ordered if not r.passed}
    report["passed"] = not failing
    if failing:
        report["failures"] = failing
    if path is not None:
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        stem = path[:-5] if path.endswith(".json") else path
        with open(stem + ".csv", "w") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRIC_COLUMNS)
            for r in ordered:
                for c in r.checks:
                    w.writerow([r.experiment, c.metric, _fmt(c.value), _fmt(c.threshold),
                                _fmt(c.passed)])
    return report, EXIT_PASS if not failing else EXIT_FAIL
