"""Synthetic metric series with planted anomalies, for tests and demos."""

from __future__ import annotations

import numpy as np

from anomalyd.ingest import LabelSet
from anomalyd.timeseries import TimeSeries

START = 1_396_310_400  # 2014-04-01 00:00:00 UTC
INTERVAL = 300


def sine_with_shift(
    n: int = 3000,
    onset: int = 1500,
    sigma: float = 0.05,
    shift_sigmas: float = 10.0,
    period: int = 100,
    seed: int = 7,
) -> TimeSeries:
    """Unit sine plus Gaussian noise, with a level shift of
    ``shift_sigmas * sigma`` from ``onset`` onwards."""
    rng = np.random.default_rng(seed)
    x = np.sin(2 * np.pi * np.arange(n) / period) + rng.normal(0.0, sigma, n)
    x[onset:] += shift_sigmas * sigma
    return TimeSeries.from_values(x, start=START, interval_s=INTERVAL)


def _base(rng: np.random.Generator, n: int, period: int, sigma: float) -> np.ndarray:
    return np.sin(2 * np.pi * np.arange(n) / period) + rng.normal(0.0, sigma, n)


def mini_corpus(n: int = 3000, seed: int = 11) -> tuple[dict[str, TimeSeries], LabelSet]:
    """Six labelled files, each with one or two planted, time-bounded anomalies.

    Returns ``{name: series}`` and the matching labels, keyed the way a NAB
    corpus is (``category/file.csv``). Anomaly positions scale with ``n``.
    """
    if n < 400:
        raise ValueError("mini_corpus needs n >= 400 to fit its anomalies")
    rng = np.random.default_rng(seed)
    sigma = 0.05
    series: dict[str, np.ndarray] = {}
    onsets: dict[str, list[int]] = {}

    def at(frac: float) -> int:
        return int(frac * n)

    name = "synthetic/level_shift.csv"
    x = _base(rng, n, 100, sigma)
    a = at(0.6)
    x[a:a + 60] += 10 * sigma
    series[name], onsets[name] = x, [a]

    name = "synthetic/dip.csv"
    x = _base(rng, n, 80, sigma)
    a = at(0.45)
    x[a:a + 40] -= 12 * sigma
    series[name], onsets[name] = x, [a]

    name = "synthetic/spikes.csv"
    x = _base(rng, n, 100, sigma)
    pair = [at(0.4), at(0.75)]
    for a in pair:
        x[a:a + 3] += 1.5
    series[name], onsets[name] = x, pair

    name = "synthetic/noise_burst.csv"
    x = _base(rng, n, 60, sigma)
    a = at(0.55)
    x[a:a + 60] += rng.normal(0.0, 6 * sigma, 60)
    series[name], onsets[name] = x, [a]

    name = "synthetic/frequency_change.csv"
    x = _base(rng, n, 100, sigma)
    a = at(0.7)
    x[a:a + 100] = np.sin(2 * np.pi * np.arange(a, a + 100) / 25) + rng.normal(0.0, sigma, 100)
    series[name], onsets[name] = x, [a]

    name = "synthetic/stuck_sensor.csv"
    x = _base(rng, n, 100, sigma)
    pair = [at(0.5), at(0.8)]
    x[pair[0]:pair[0] + 80] = x[pair[0]] + rng.normal(0.0, sigma / 5, 80)
    x[pair[1]:pair[1] + 50] += 8 * sigma
    series[name], onsets[name] = x, pair

    corpus = {
        name: TimeSeries.from_values(vals, start=START, interval_s=INTERVAL)
        for name, vals in series.items()
    }
    labels = LabelSet({
        name: [START + INTERVAL * i for i in onsets[name]] for name in series
    })
    return corpus, labels
