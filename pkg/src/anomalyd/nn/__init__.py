"""Minimal float64 neural engine for the GRU sequence autoencoder."""

from anomalyd.nn.autoencoder import (
    AutoencoderConfig,
    AutoencoderModel,
    ErrorSeries,
    decode,
    encode,
    gradient_check,
    loss_and_grads,
    mse_loss,
    reconstruction_errors,
)
from anomalyd.nn.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from anomalyd.nn.gru import GruCellParams, gru_cell_forward
from anomalyd.nn.train import DivergedError, train

__all__ = [
    "AutoencoderConfig",
    "AutoencoderModel",
    "Checkpoint",
    "DivergedError",
    "ErrorSeries",
    "GruCellParams",
    "decode",
    "encode",
    "gradient_check",
    "gru_cell_forward",
    "load_checkpoint",
    "loss_and_grads",
    "mse_loss",
    "reconstruction_errors",
    "save_checkpoint",
    "train",
]
