"""End-to-end orchestration shared by the CLI and the acceptance tests.

Each file is trained on its first ``train_fraction`` of points (the same
prefix the scorer treats as probationary) and every point is scored.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from anomalyd.ingest import DetectionRecord, LabelSet, parse_labels, parse_metric_csv, write_labels, write_metric_csv
from anomalyd.likelihood import LikelihoodConfig, LikelihoodSeries, likelihood_series
from anomalyd.nn import AutoencoderConfig, AutoencoderModel, ErrorSeries, reconstruction_errors, train
from anomalyd.scoring import PROFILES, ScoreReport, build_windows, score_corpus
from anomalyd.timeseries import NormalizationParams, TimeSeries, aggregate, make_windows, minmax_apply, minmax_fit

logger = logging.getLogger(__name__)

SPLIT_NOTE = (
    "train/score split: each model is fit on the first train_fraction of its file "
    "(the probationary prefix) and scores every point; detections in the prefix are not scored"
)


@dataclass
class RunConfig:
    data: Path | None = None
    labels: Path | None = None
    model: Path | None = None
    out: Path | None = None
    autoencoder: AutoencoderConfig = field(default_factory=AutoencoderConfig)
    likelihood: LikelihoodConfig = field(default_factory=LikelihoodConfig)
    interval: int = 0  # 0 disables aggregation
    fill: float = 0.0
    train_fraction: float = 0.15
    window_fraction: float = 0.10
    profile: str = "standard"

    def __post_init__(self):
        if not 0 < self.train_fraction <= 1:
            raise ValueError("train_fraction must lie in (0, 1]")
        if not 0 < self.window_fraction < 1:
            raise ValueError("window_fraction must lie in (0, 1)")
        if self.interval < 0:
            raise ValueError("interval must be non-negative")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}; choose from {', '.join(PROFILES)}")


def prepare(series: TimeSeries, config: RunConfig) -> TimeSeries:
    if config.interval:
        series = aggregate(series, config.interval, config.fill)
    return series


def train_count(n: int, fraction: float) -> int:
    return n if fraction >= 1 else int(math.floor(fraction * n))


def fit(series: TimeSeries, config: RunConfig) -> tuple[AutoencoderModel, NormalizationParams, list[float]]:
    """Normalize on the training prefix and train an autoencoder on it."""
    if series.empty:
        raise ValueError("empty input")
    n = train_count(len(series), config.train_fraction)
    head = series.slice(0, n)
    if n < config.autoencoder.window_length:
        raise ValueError("series shorter than window")
    params = minmax_fit(head)
    ae = replace(config.autoencoder, input_dim=series.dim)
    model, losses = train(make_windows(minmax_apply(head, params), ae.window_length, 1), ae)
    return model, params, losses


@dataclass
class Detection:
    series: TimeSeries
    errors: ErrorSeries
    likelihood: LikelihoodSeries
    flags: np.ndarray  # full-length, False before the first scored point

    def records(self) -> list[DetectionRecord]:
        offset = len(self.series) - len(self.errors)
        out = []
        for j in range(len(self.errors)):
            i = offset + j
            out.append(DetectionRecord(
                int(self.series.timestamps[i]),
                tuple(float(v) for v in self.series.values[i]),
                float(self.errors.errors[j]),
                float(self.likelihood.likelihood[j]),
                bool(self.likelihood.flags[j]),
            ))
        return out


def detect(model: AutoencoderModel, params: NormalizationParams, series: TimeSeries, lik: LikelihoodConfig) -> Detection:
    if params.dim != series.dim or model.config.input_dim != series.dim:
        raise ValueError(
            f"dimension mismatch: checkpoint has {model.config.input_dim} dims, data has {series.dim}"
        )
    if len(series) < model.config.window_length:
        raise ValueError("series shorter than window")
    errors = reconstruction_errors(model, minmax_apply(series, params))
    ls = likelihood_series(errors, lik)
    flags = np.zeros(len(series), dtype=bool)
    flags[len(series) - len(errors):] = ls.flags
    return Detection(series, errors, ls, flags)


def raw_error_flags(det: Detection, n_train: int, epsilon: float) -> np.ndarray:
    """Baseline that thresholds the reconstruction error itself.

    Errors are min-max scaled with the extent seen over the training prefix
    (the only errors known when streaming starts), clamped to [0, 1], and
    flagged at ``>= 1 - epsilon`` like the likelihood.
    """
    offset = len(det.series) - len(det.errors)
    seen = det.errors.errors[: max(1, n_train - offset)]
    lo, hi = float(seen.min()), float(seen.max())
    span = hi - lo
    scaled = np.zeros_like(det.errors.errors) if span == 0 else np.clip((det.errors.errors - lo) / span, 0.0, 1.0)
    if span == 0:
        scaled[det.errors.errors > hi] = 1.0
    flags = np.zeros(len(det.series), dtype=bool)
    flags[offset:] = scaled >= 1.0 - epsilon
    return flags


@dataclass
class CorpusResult:
    reports: list[ScoreReport]
    raw_error_reports: list[ScoreReport]
    failures: dict[str, str]
    detections: dict[str, Detection]

    def report(self, profile: str = "standard", raw_error: bool = False) -> ScoreReport:
        for rep in self.raw_error_reports if raw_error else self.reports:
            if rep.profile == profile:
                return rep
        raise KeyError(profile)


def run_corpus(corpus: Mapping[str, TimeSeries], labels: LabelSet, config: RunConfig) -> CorpusResult:
    """Train, detect and score every file with shared hyperparameters.

    Per-file failures are recorded and the run continues.
    """
    scored, raw_scored = {}, {}
    failures: dict[str, str] = {}
    detections: dict[str, Detection] = {}
    for name in sorted(corpus):
        try:
            series = prepare(corpus[name], config)
            n_train = train_count(len(series), config.train_fraction)
            win = build_windows(labels.get(name, []), series, config.window_fraction, config.train_fraction)
            model, params, _ = fit(series, config)
            det = detect(model, params, series, config.likelihood)
        except (ValueError, ArithmeticError, RuntimeError) as exc:
            logger.warning("%s: %s", name, exc)
            failures[name] = str(exc)
            continue
        detections[name] = det
        scored[name] = (det.flags, win)
        raw_scored[name] = (raw_error_flags(det, n_train, config.likelihood.epsilon), win)
        logger.info("%s: %d flags", name, int(det.flags.sum()))
    if not scored:
        raise ValueError("no file in the corpus could be processed")
    reports = [score_corpus(scored, p) for p in PROFILES]
    raw_reports = [score_corpus(raw_scored, p) for p in PROFILES]
    return CorpusResult(reports, raw_reports, failures, detections)


def load_corpus(root: Path, labels_path: Path | None = None) -> tuple[dict[str, TimeSeries], LabelSet, dict[str, str]]:
    """Read a NAB-layout corpus: ``root/data/<category>/*.csv`` plus
    ``root/labels/combined_labels.json``. A plain directory of CSVs with an
    explicit labels file also works.

    Files that fail to parse are returned in the third element, not raised.
    """
    root = Path(root)
    data_dir = root / "data" if (root / "data").is_dir() else root
    if labels_path is None:
        labels_path = root / "labels" / "combined_labels.json"
    labels = parse_labels(Path(labels_path).read_text(encoding="utf-8"))
    corpus, failures = {}, {}
    paths = sorted(data_dir.rglob("*.csv"))
    if not paths:
        raise FileNotFoundError(f"no CSV files under {data_dir}")
    for path in paths:
        name = path.relative_to(data_dir).as_posix()
        try:
            corpus[name] = parse_metric_csv(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            failures[name] = str(exc)
    return corpus, labels, failures


def save_corpus(root: Path, corpus: Mapping[str, TimeSeries], labels: LabelSet) -> None:
    """Write ``corpus`` in the layout ``load_corpus`` reads."""
    root = Path(root)
    for name, series in corpus.items():
        path = root / "data" / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(write_metric_csv(series), encoding="utf-8")
    (root / "labels").mkdir(parents=True, exist_ok=True)
    (root / "labels" / "combined_labels.json").write_text(write_labels(labels), encoding="utf-8")
