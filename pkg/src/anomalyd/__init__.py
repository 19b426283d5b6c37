"""GRU autoencoder anomaly detection for resource-utilization metrics."""

from anomalyd.timeseries import TimeSeries, NormalizationParams, WindowedDataset
from anomalyd.likelihood import LikelihoodConfig, LikelihoodSeries, likelihood_series
from anomalyd.nn import AutoencoderConfig, AutoencoderModel, ErrorSeries, train, reconstruction_errors

__all__ = [
    "TimeSeries",
    "NormalizationParams",
    "WindowedDataset",
    "LikelihoodConfig",
    "LikelihoodSeries",
    "likelihood_series",
    "AutoencoderConfig",
    "AutoencoderModel",
    "ErrorSeries",
    "train",
    "reconstruction_errors",
]

__version__ = "0.1.0"
