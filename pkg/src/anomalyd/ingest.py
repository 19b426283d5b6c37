"""Reading metric CSVs and NAB label files, writing detection tables."""

from __future__ import annotations

import calendar
import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from anomalyd.timeseries import TimeSeries


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_FORMATS = ("%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M:%S.%f", "%Y-%m-%dT%H:%M:%S")


def parse_timestamp(token: str) -> int:
    """Epoch seconds from an integer string or a NAB ``YYYY-MM-DD hh:mm:ss``
    string (read as UTC)."""
    token = token.strip()
    if token.lstrip("-").isdigit():
        return int(token)
    for fmt in _FORMATS:
        try:
            dt = datetime.strptime(token, fmt)
        except ValueError:
            continue
        return calendar.timegm(dt.timetuple())
    raise ValueError(f"unparseable timestamp {token!r}")


def format_timestamp(ts: int) -> str:
    return datetime.utcfromtimestamp(int(ts)).strftime("%Y-%m-%d %H:%M:%S")


def parse_metric_csv(text: str) -> TimeSeries:
    """Parse ``timestamp,<dim>,...`` CSV text into a sorted TimeSeries.

    Raises ParseError naming the offending line for bad timestamps,
    non-numeric cells and duplicate timestamps.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise ParseError("missing header row", 1)
    header = [c.strip() for c in rows[0]]
    if header[0] != "timestamp":
        raise ParseError(f"first column must be 'timestamp', got {header[0]!r}", 1)
    dims = header[1:]
    if not dims:
        raise ParseError("no value columns", 1)

    stamps: list[int] = []
    values: list[list[float]] = []
    lines: list[int] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", lineno)
        try:
            ts = parse_timestamp(row[0])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        vals = []
        for name, cell in zip(dims, row[1:]):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric value {cell!r} in column {name!r}", lineno) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cell!r} in column {name!r}", lineno)
            vals.append(v)
        stamps.append(ts)
        values.append(vals)
        lines.append(lineno)

    order = sorted(range(len(stamps)), key=lambda i: (stamps[i], lines[i]))
    for prev, cur in zip(order, order[1:]):
        if stamps[prev] == stamps[cur]:
            raise ParseError(f"duplicate timestamp {stamps[cur]}", max(lines[prev], lines[cur]))
    ts_arr = np.array([stamps[i] for i in order], dtype=np.int64)
    val_arr = np.array([values[i] for i in order], dtype=np.float64).reshape(len(order), len(dims))
    return TimeSeries(ts_arr, val_arr, tuple(dims))


def write_metric_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    buf.write(",".join(("timestamp",) + series.dim_names) + "\n")
    for ts, row in zip(series.timestamps, series.values):
        buf.write(",".join([str(int(ts))] + [_real(v) for v in row]) + "\n")
    return buf.getvalue()


@dataclass
class LabelSet:
    """Ground-truth anomaly timestamps keyed by data-file name."""

    labels: dict[str, list[int]] = field(default_factory=dict)

    def __getitem__(self, name: str) -> list[int]:
        return self.labels[name]

    def __contains__(self, name: object) -> bool:
        return name in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def get(self, name: str, default=None):
        return self.labels.get(name, default)

    def files(self) -> list[str]:
        return sorted(self.labels)


def parse_labels(text: str) -> LabelSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed label document: {exc.msg}", exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("label document must map file names to timestamp lists")
    out: dict[str, list[int]] = {}
    for name, stamps in doc.items():
        if not isinstance(stamps, list):
            raise ParseError(f"labels for {name!r} must be a list")
        parsed = []
        for s in stamps:
            if isinstance(s, bool) or not isinstance(s, (str, int)):
                raise ParseError(f"bad timestamp {s!r} for {name!r}")
            try:
                parsed.append(parse_timestamp(str(s)))
            except ValueError as exc:
                raise ParseError(f"{exc} for {name!r}") from None
        out[name] = sorted(parsed)
    return LabelSet(out)


def write_labels(labels: LabelSet) -> str:
    doc = {name: [format_timestamp(t) for t in labels.labels[name]] for name in labels.files()}
    return json.dumps(doc, indent=4) + "\n"


@dataclass(frozen=True)
class DetectionRecord:
    timestamp: int
    raw_values: tuple[float, ...]
    error: float
    likelihood: float
    flagged: bool


def _real(x: float) -> str:
    # shortest text that reads back to the same double
    return repr(float(x))


def write_detections(records: Iterable[DetectionRecord], dim_names: Sequence[str] | None = None) -> str:
    """Render records as ``timestamp,<dims...>,error,likelihood,flagged``."""
    records = list(records)
    if dim_names is None:
        d = len(records[0].raw_values) if records else 1
        dim_names = ["value"] if d == 1 else [f"value{i}" for i in range(d)]
    lines = [",".join(["timestamp", *dim_names, "error", "likelihood", "flagged"])]
    for rec in records:
        if len(rec.raw_values) != len(dim_names):
            raise ValueError("record dimension does not match dim_names")
        cells = [str(int(rec.timestamp))]
        cells += [_real(v) for v in rec.raw_values]
        cells += [_real(rec.error), _real(rec.likelihood), "1" if rec.flagged else "0"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def parse_detections(text: str) -> tuple[list[DetectionRecord], tuple[str, ...]]:
    """Inverse of write_detections; returns the records and the metric column names."""
    series = parse_metric_csv(text)
    names = series.dim_names
    if len(names) < 4 or names[-3:] != ("error", "likelihood", "flagged"):
        raise ParseError("not a detections table: expected trailing error,likelihood,flagged columns", 1)
    records = []
    for ts, row in zip(series.timestamps, series.values):
        flag = row[-1]
        if flag not in (0.0, 1.0):
            raise ParseError(f"flagged must be 0 or 1 at timestamp {int(ts)}")
        records.append(
            DetectionRecord(int(ts), tuple(float(v) for v in row[:-3]), float(row[-3]), float(row[-2]), bool(flag))
        )
    return records, names[:-3]
