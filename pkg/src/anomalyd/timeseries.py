"""Uniformly sampled metric series: normalization, aggregation, windowing."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped T x D metric matrix.

    ``timestamps`` are integer epoch seconds, strictly increasing.
    """

    timestamps: np.ndarray
    values: np.ndarray
    dim_names: tuple[str, ...]

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64)
        names = tuple(self.dim_names)
        if vals.size == 0:
            vals = vals.reshape(len(ts), len(names))
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if vals.ndim != 2:
            raise ValueError("values must be a T x D matrix")
        if vals.shape[0] != ts.shape[0]:
            raise ValueError(
                f"row count {vals.shape[0]} does not match timestamp count {ts.shape[0]}"
            )
        if vals.shape[1] != len(names):
            raise ValueError(f"{vals.shape[1]} value columns but {len(names)} dim names")
        if ts.size > 1 and np.any(np.diff(ts) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", _frozen(ts))
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "dim_names", names)

    def __len__(self) -> int:
        return int(self.timestamps.shape[0])

    @property
    def dim(self) -> int:
        return len(self.dim_names)

    @property
    def empty(self) -> bool:
        return len(self) == 0

    def slice(self, start: int, stop: int | None = None) -> "TimeSeries":
        return TimeSeries(self.timestamps[start:stop], self.values[start:stop], self.dim_names)

    @classmethod
    def from_values(cls, values, start: int = 0, interval_s: int = 300, dim_names=None) -> "TimeSeries":
        """Build a regularly spaced series starting at ``start``."""
        vals = np.asarray(values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals.reshape(-1, 1)
        if dim_names is None:
            dim_names = ["value"] if vals.shape[1] == 1 else [f"v{i}" for i in range(vals.shape[1])]
        ts = start + interval_s * np.arange(vals.shape[0], dtype=np.int64)
        return cls(ts, vals, tuple(dim_names))


@dataclass(frozen=True)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.minimum, dtype=np.float64).reshape(-1)
        hi = np.asarray(self.maximum, dtype=np.float64).reshape(-1)
        if lo.shape != hi.shape:
            raise ValueError("min and max must have the same length")
        if np.any(lo > hi):
            raise ValueError("min must not exceed max")
        object.__setattr__(self, "minimum", _frozen(lo))
        object.__setattr__(self, "maximum", _frozen(hi))

    @property
    def dim(self) -> int:
        return int(self.minimum.shape[0])


@dataclass(frozen=True)
class WindowedDataset:
    windows: np.ndarray  # (N, L, D)
    window_length: int
    stride: int
    origins: np.ndarray

    def __len__(self) -> int:
        return int(self.windows.shape[0])


def minmax_fit(series: TimeSeries) -> NormalizationParams:
    if series.empty:
        raise ValueError("empty input")
    return NormalizationParams(series.values.min(axis=0), series.values.max(axis=0))


def _scale(values: np.ndarray, params: NormalizationParams) -> np.ndarray:
    span = params.maximum - params.minimum
    degenerate = span == 0
    out = (values - params.minimum) / np.where(degenerate, 1.0, span)
    out = np.clip(out, 0.0, 1.0)
    out[:, degenerate] = 0.0
    return out


def minmax_apply(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    """Map each column onto [0, 1]; out-of-range values are clamped and
    constant columns become 0.0."""
    if params.dim != series.dim:
        raise ValueError(
            f"dimension mismatch: params have {params.dim} dims, series has {series.dim}"
        )
    return TimeSeries(series.timestamps, _scale(series.values, params), series.dim_names)


def minmax_invert(series: TimeSeries, params: NormalizationParams) -> TimeSeries:
    if params.dim != series.dim:
        raise ValueError("dimension mismatch")
    span = params.maximum - params.minimum
    return TimeSeries(
        series.timestamps, series.values * span + params.minimum, series.dim_names
    )


def aggregate(series: TimeSeries, interval_s: int, fill: float | Sequence[float] = 0.0) -> TimeSeries:
    """Average observations into gap-free buckets of ``interval_s`` seconds.

    Buckets start at ``floor(t / interval_s) * interval_s``. Buckets with no
    observation take the per-dimension ``fill`` value.
    """
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    fill_arr = np.broadcast_to(np.asarray(fill, dtype=np.float64), (series.dim,))
    if series.empty:
        return series
    buckets = (series.timestamps // interval_s) * interval_s
    first, last = int(buckets[0]), int(buckets[-1])
    n = (last - first) // interval_s + 1
    idx = (buckets - first) // interval_s
    sums = np.zeros((n, series.dim))
    np.add.at(sums, idx, series.values)
    counts = np.bincount(idx, minlength=n).astype(np.float64)
    out = np.empty_like(sums)
    seen = counts > 0
    out[seen] = sums[seen] / counts[seen, None]
    out[~seen] = fill_arr
    ts = first + interval_s * np.arange(n, dtype=np.int64)
    return TimeSeries(ts, out, series.dim_names)


def make_windows(series: TimeSeries, L: int, stride: int = 1) -> WindowedDataset:
    T = len(series)
    if L < 1:
        raise ValueError("window length must be >= 1")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    if L > T:
        raise ValueError("series shorter than window")
    origins = np.arange(0, T - L + 1, stride, dtype=np.int64)
    view = np.lib.stride_tricks.sliding_window_view(series.values, L, axis=0)
    # sliding_window_view puts the window axis last: (T-L+1, D, L)
    windows = np.ascontiguousarray(view[origins].transpose(0, 2, 1))
    return WindowedDataset(windows, L, stride, origins)
