from __future__ import annotations

import logging
import math

import numpy as np

from anomalyd.nn.autoencoder import AutoencoderConfig, AutoencoderModel, loss_and_grads
from anomalyd.nn.optim import Adam, clip_global_norm
from anomalyd.timeseries import WindowedDataset

logger = logging.getLogger(__name__)


class DivergedError(RuntimeError):
    pass


def train(dataset: WindowedDataset, config: AutoencoderConfig) -> tuple[AutoencoderModel, list[float]]:
    """Fit an autoencoder to ``dataset`` with minibatch Adam.

    Returns the model and the mean training loss of every epoch. One
    generator seeded from ``config.seed`` drives both initialization and
    the per-epoch shuffles, so a given seed always yields identical bits.
    """
    windows = np.asarray(dataset.windows, dtype=np.float64)
    if windows.ndim != 3 or windows.shape[0] == 0:
        raise ValueError("empty dataset")
    if windows.shape[1] != config.window_length or windows.shape[2] != config.input_dim:
        raise ValueError(
            f"dataset windows are {windows.shape[1]}x{windows.shape[2]}, "
            f"config expects {config.window_length}x{config.input_dim}"
        )

    rng = np.random.default_rng(config.seed)
    model = AutoencoderModel.initialize(config, rng)
    params = model.parameters()
    opt = Adam(params, lr=config.learning_rate)
    n = windows.shape[0]
    history: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            batch = windows[order[start:start + config.batch_size]]
            loss, grads = loss_and_grads(model, batch)
            if not math.isfinite(loss):
                raise DivergedError(f"diverged: non-finite loss in epoch {epoch}")
            clip_global_norm(grads, config.clip_norm)
            opt.step(grads)
            total += loss * batch.shape[0]
        mean = total / n
        history.append(mean)
        logger.debug("epoch %d loss %.6g", epoch, mean)
    return model, history
