"""NAB-style scoring: anomaly windows, the scaled sigmoid, application
profiles and the 0-100 corpus normalization.

Geometry and weights follow the NAB reference conventions: windows span
10% of the file divided among its labels, centered on each label; the first
15% of every file is probationary and unscored; a window is worth at most
one true positive, and earlier detections inside it earn more.
"""

from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from anomalyd.timeseries import TimeSeries

SCORING_NOTE = (
    "scoring: windows 10% of each file split among its labels, centered; probation first 15% "
    "with no 5000-point cap; sigmoid steepness 5; perfect detector flags each window at "
    "max(window start, probation end)"
)


@dataclass(frozen=True)
class ScoreProfile:
    tp_weight: float = 1.0
    fp_weight: float = 0.11
    fn_weight: float = 1.0

    def __post_init__(self):
        if min(self.tp_weight, self.fp_weight, self.fn_weight) < 0:
            raise ValueError("profile weights must be non-negative")


PROFILES: dict[str, ScoreProfile] = {
    "standard": ScoreProfile(1.0, 0.11, 1.0),
    "reward_low_FP_rate": ScoreProfile(1.0, 0.22, 1.0),
    "reward_low_FN_rate": ScoreProfile(1.0, 0.11, 2.0),
}


@dataclass(frozen=True)
class AnomalyWindowSet:
    """Anomaly windows of one file.

    ``windows`` holds inclusive ``(start, end)`` timestamp pairs and
    ``index_windows`` the same intervals as row indices into ``timestamps``.
    Detections before ``probation_end`` (index ``probation_index``) are
    ignored.
    """

    timestamps: np.ndarray
    windows: tuple[tuple[int, int], ...]
    index_windows: tuple[tuple[int, int], ...]
    probation_index: int
    probation_end: int

    def __len__(self) -> int:
        return len(self.windows)


def build_windows(
    labels: Sequence[int],
    series: TimeSeries | Sequence[int],
    window_fraction: float = 0.10,
    probation_fraction: float = 0.15,
) -> AnomalyWindowSet:
    """Windows for one file's label timestamps.

    ``series`` may be the TimeSeries or just its timestamp array.
    """
    if not 0 < window_fraction < 1 or not 0 < probation_fraction < 1:
        raise ValueError("fractions must lie in (0, 1)")
    ts = np.asarray(series.timestamps if isinstance(series, TimeSeries) else series, dtype=np.int64)
    T = int(ts.shape[0])
    if T == 0:
        if len(labels):
            raise ValueError("labels given for an empty series")
        return AnomalyWindowSet(ts, (), (), 0, 0)

    labels = sorted(int(t) for t in labels)
    spans: list[list[int]] = []
    if labels:
        width = max(1, int(window_fraction * T / len(labels)))
        for lab in labels:
            if lab < ts[0] or lab > ts[-1]:
                raise ValueError(f"label {lab} outside series extent [{ts[0]}, {ts[-1]}]")
            centre = int(np.searchsorted(ts, lab, side="left"))
            start = max(0, centre - width // 2)
            end = min(T - 1, centre - width // 2 + width - 1)
            if spans and start <= spans[-1][1]:
                spans[-1][1] = max(spans[-1][1], end)
            else:
                spans.append([start, end])

    probation_index = min(int(math.floor(probation_fraction * T)), T)
    probation_end = int(ts[probation_index]) if probation_index < T else int(ts[-1]) + 1
    return AnomalyWindowSet(
        ts,
        tuple((int(ts[a]), int(ts[b])) for a, b in spans),
        tuple((a, b) for a, b in spans),
        probation_index,
        probation_end,
    )


def scaled_sigmoid(y: float) -> float:
    """Reward for a detection ``y`` window-lengths past a window's right end.

    ``2 / (1 + exp(5y)) - 1``, saturating to -1 beyond three window lengths.
    """
    if y > 3.0:
        return -1.0
    return 2.0 / (1.0 + math.exp(5.0 * y)) - 1.0


@dataclass
class FileScore:
    raw: float
    tp: int = 0
    fp: int = 0
    fn: int = 0


def score_file(flags: Sequence[bool], windows: AnomalyWindowSet, profile: ScoreProfile = PROFILES["standard"]) -> FileScore:
    flags = np.asarray(flags, dtype=bool)
    if flags.shape[0] != windows.timestamps.shape[0]:
        raise ValueError(f"{flags.shape[0]} flags for a series of {windows.timestamps.shape[0]} points")
    spans = windows.index_windows
    starts = [a for a, _ in spans]
    detected = [False] * len(spans)
    result = FileScore(0.0)
    for i in np.flatnonzero(flags):
        i = int(i)
        if i < windows.probation_index:
            continue
        k = bisect.bisect_right(starts, i) - 1
        if k >= 0 and i <= spans[k][1]:
            if not detected[k]:
                detected[k] = True
                a, b = spans[k]
                result.raw += profile.tp_weight * scaled_sigmoid((i - b) / max(b - a, 1))
                result.tp += 1
            continue
        result.fp += 1
        if k < 0:
            result.raw -= profile.fp_weight
        else:
            a, b = spans[k]
            result.raw += profile.fp_weight * scaled_sigmoid((i - b) / max(b - a, 1))
    for hit in detected:
        if not hit:
            result.raw -= profile.fn_weight
            result.fn += 1
    return result


def perfect_flags(windows: AnomalyWindowSet) -> np.ndarray:
    """One detection at the earliest scorable point of every window."""
    flags = np.zeros(windows.timestamps.shape[0], dtype=bool)
    for a, b in windows.index_windows:
        i = max(a, windows.probation_index)
        if i <= b:
            flags[i] = True
    return flags


def normalize_corpus(raw: float, perfect_raw: float, null_raw: float) -> float:
    denom = perfect_raw - null_raw
    if not denom > 0 or not math.isfinite(denom):
        raise ValueError("degenerate normalization: perfect score does not exceed null score")
    return 100.0 * (raw - null_raw) / denom


@dataclass
class ScoreReport:
    profile: str
    per_file: dict[str, FileScore] = field(default_factory=dict)
    raw: float = 0.0
    perfect_raw: float = 0.0
    null_raw: float = 0.0
    normalized: float = 0.0

    @property
    def tp(self) -> int:
        return sum(s.tp for s in self.per_file.values())

    @property
    def fp(self) -> int:
        return sum(s.fp for s in self.per_file.values())

    @property
    def fn(self) -> int:
        return sum(s.fn for s in self.per_file.values())


def score_corpus(
    files: Mapping[str, tuple[Sequence[bool], AnomalyWindowSet]],
    profile: str | ScoreProfile = "standard",
) -> ScoreReport:
    """Score every ``name -> (flags, windows)`` entry and normalize the sum."""
    name = profile if isinstance(profile, str) else "custom"
    prof = PROFILES[profile] if isinstance(profile, str) else profile
    report = ScoreReport(name)
    for fname in sorted(files):
        flags, win = files[fname]
        fs = score_file(flags, win, prof)
        report.per_file[fname] = fs
        report.raw += fs.raw
        report.perfect_raw += score_file(perfect_flags(win), win, prof).raw
        report.null_raw += score_file(np.zeros(len(flags), dtype=bool), win, prof).raw
    report.normalized = normalize_corpus(report.raw, report.perfect_raw, report.null_raw)
    return report


def write_report(reports: Sequence[ScoreReport], header: Sequence[str] = ()) -> str:
    """Per-file CSV rows for every profile, then one summary line per profile.

    ``header`` lines are emitted first as ``#`` comments.
    """
    buf = io.StringIO()
    for line in header:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["profile", "file", "raw_score", "tp", "fp", "fn"])
    for rep in reports:
        for fname, fs in rep.per_file.items():
            w.writerow([rep.profile, fname, f"{fs.raw:.10g}", fs.tp, fs.fp, fs.fn])
    for rep in reports:
        buf.write(
            f"# summary profile={rep.profile} normalized={rep.normalized:.4f} raw={rep.raw:.6g} "
            f"perfect={rep.perfect_raw:.6g} null={rep.null_raw:.6g} tp={rep.tp} fp={rep.fp} fn={rep.fn}\n"
        )
    return buf.getvalue()
