"""Anomaly likelihood from a stream of reconstruction errors.

The long window (``W`` points) gives the error mean and sample standard
deviation, the short window (``W_short`` points) a recent mean. The
likelihood is ``1 - Q((mu_short - mu) / sigma)`` with ``Q`` the standard
normal tail. A point is anomalous when the likelihood reaches
``1 - epsilon``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_SQRT2 = math.sqrt(2.0)
_L_LO = float(np.nextafter(0.0, 1.0))
_L_HI = float(np.nextafter(1.0, 0.0))


@dataclass(frozen=True)
class LikelihoodConfig:
    W: int = 500
    W_short: int = 10
    epsilon: float = 0.0437
    sigma_floor: float = 1e-6

    def __post_init__(self):
        if self.W_short < 1 or self.W < 2:
            raise ValueError("window lengths must be positive (W >= 2)")
        if not self.W_short < self.W:
            raise ValueError("short window must be shorter than the long window")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if not self.sigma_floor > 0.0:
            raise ValueError("sigma_floor must be positive")

    @property
    def threshold(self) -> float:
        return 1.0 - self.epsilon


@dataclass(frozen=True)
class LikelihoodSeries:
    timestamps: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    mu_short: np.ndarray
    likelihood: np.ndarray
    flags: np.ndarray

    def __len__(self) -> int:
        return int(self.likelihood.shape[0])


def q_function(x):
    """Standard normal tail probability P(Z > x), via erfc."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * np.vectorize(math.erfc, otypes=[float])(np.asarray(x, dtype=float) / _SQRT2)


def _window(s: Sequence[float], W: int, t: int):
    return s[max(0, t - W + 1): t + 1]


def rolling_mean(s: Sequence[float], W: int, t: int) -> float:
    """Mean of the last ``min(W, t + 1)`` values ending at index ``t``."""
    win = _window(s, W, t)
    return math.fsum(win) / len(win)


def rolling_std(s: Sequence[float], W: int, t: int, sigma_floor: float = 1e-6) -> float:
    """Sample standard deviation over the same window as rolling_mean,
    never below ``sigma_floor``."""
    win = _window(s, W, t)
    n = len(win)
    if n < 2:
        return sigma_floor
    mu = math.fsum(win) / n
    var = math.fsum((v - mu) ** 2 for v in win) / (n - 1)
    return max(math.sqrt(var), sigma_floor)


def likelihood_from_stats(mu: float, sigma: float, mu_short: float) -> float:
    # 1 - Q(z) == Q(-z); the latter keeps precision when z is very negative.
    L = q_function(-(mu_short - mu) / sigma)
    return min(max(L, _L_LO), _L_HI)


def threshold_flags(L, epsilon: float) -> np.ndarray:
    return np.asarray(L, dtype=float) >= 1.0 - epsilon


class AnomalyLikelihood:
    """Incremental evaluator; feed one error at a time with ``update``.

    Long-window statistics use a sliding Welford update so each step is
    O(1); the short window is small and summed exactly.
    """

    def __init__(self, config: LikelihoodConfig | None = None):
        self.config = config or LikelihoodConfig()
        self._long: deque[float] = deque()
        self._short: deque[float] = deque()
        self._mean = 0.0
        self._m2 = 0.0
        self.t = -1

    def _push_long(self, x: float) -> None:
        W = self.config.W
        if len(self._long) < W:
            self._long.append(x)
            n = len(self._long)
            delta = x - self._mean
            self._mean += delta / n
            self._m2 += delta * (x - self._mean)
        else:
            old = self._long.popleft()
            self._long.append(x)
            old_mean = self._mean
            self._mean = old_mean + (x - old) / W
            self._m2 += (x - old) * (x - self._mean + old - old_mean)
        if self._m2 < 0.0:
            self._m2 = 0.0

    def update(self, s: float) -> tuple[float, float, float, float]:
        """Consume error ``s``; return ``(mu, sigma, mu_short, L)``."""
        cfg = self.config
        s = float(s)
        self.t += 1
        self._push_long(s)
        self._short.append(s)
        if len(self._short) > cfg.W_short:
            self._short.popleft()

        n = len(self._long)
        mu = self._mean
        sigma = cfg.sigma_floor if n < 2 else max(math.sqrt(self._m2 / (n - 1)), cfg.sigma_floor)
        mu_short = math.fsum(self._short) / len(self._short)
        if self.t < cfg.W_short - 1:
            L = 0.5
        else:
            L = likelihood_from_stats(mu, sigma, mu_short)
        return mu, sigma, mu_short, L


def likelihood_series(errors, config: LikelihoodConfig | None = None, timestamps: Iterable[int] | None = None) -> LikelihoodSeries:
    """Run the incremental evaluator over a whole error stream.

    ``errors`` may be an ErrorSeries (its timestamps are used) or a plain
    sequence of reals.
    """
    config = config or LikelihoodConfig()
    if hasattr(errors, "errors"):
        timestamps = errors.timestamps if timestamps is None else timestamps
        errors = errors.errors
    s = np.asarray(errors, dtype=float).reshape(-1)
    if s.size == 0:
        raise ValueError("empty error series")
    ts = np.arange(s.size, dtype=np.int64) if timestamps is None else np.asarray(timestamps, dtype=np.int64)
    if ts.shape != s.shape:
        raise ValueError("timestamps and errors differ in length")

    evaluator = AnomalyLikelihood(config)
    out = np.array([evaluator.update(v) for v in s], dtype=float).reshape(-1, 4)
    L = out[:, 3]
    flags = threshold_flags(L, config.epsilon)
    flags[: config.W_short - 1] = False
    return LikelihoodSeries(ts, out[:, 0], out[:, 1], out[:, 2], L, flags)
