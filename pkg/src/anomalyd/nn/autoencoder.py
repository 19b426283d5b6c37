"""Sequence autoencoder: GRU encoder, GRU decoder fed its own outputs,
linear projection back to the input space.

The decoder starts from the encoder's final state and emits the window
last-row-first; the output is flipped so row ``i`` lines up with input
row ``i``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from anomalyd.nn.gru import GATE_PARAMS, GruCellParams, pack, param_grads, step, step_backward
from anomalyd.timeseries import TimeSeries, make_windows


@dataclass(frozen=True)
class AutoencoderConfig:
    input_dim: int = 1
    hidden_size: int = 32
    window_length: int = 48
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self):
        for name in ("input_dim", "hidden_size", "window_length", "batch_size"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not isinstance(self.epochs, (int, np.integer)) or self.epochs < 0:
            raise ValueError("epochs must be a non-negative integer")
        if not self.learning_rate > 0 or not self.clip_norm > 0:
            raise ValueError("learning_rate and clip_norm must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AutoencoderModel:
    encoder: GruCellParams
    decoder: GruCellParams
    proj_W: np.ndarray  # (D, H)
    proj_b: np.ndarray  # (D,)
    config: AutoencoderConfig = field(default_factory=AutoencoderConfig)

    def __post_init__(self):
        self.proj_W = np.asarray(self.proj_W, dtype=np.float64)
        self.proj_b = np.asarray(self.proj_b, dtype=np.float64)
        D, H = self.config.input_dim, self.config.hidden_size
        for cell in (self.encoder, self.decoder):
            if cell.input_size != D or cell.hidden_size != H:
                raise ValueError(f"GRU cell must be D={D}, H={H}")
        if self.proj_W.shape != (D, H) or self.proj_b.shape != (D,):
            raise ValueError(f"projection must be {D}x{H} with bias of length {D}")

    @classmethod
    def initialize(cls, config: AutoencoderConfig, rng: np.random.Generator | None = None) -> "AutoencoderModel":
        """Uniform draws in [-1/sqrt(H), 1/sqrt(H)]: encoder, decoder, projection."""
        if rng is None:
            rng = np.random.default_rng(config.seed)
        D, H = config.input_dim, config.hidden_size
        scale = 1.0 / math.sqrt(H)
        enc = GruCellParams.uniform(D, H, rng, scale)
        dec = GruCellParams.uniform(D, H, rng, scale)
        W = rng.uniform(-scale, scale, size=(D, H))
        b = rng.uniform(-scale, scale, size=(D,))
        return cls(enc, dec, W, b, config)

    @classmethod
    def zeros(cls, config: AutoencoderConfig) -> "AutoencoderModel":
        D, H = config.input_dim, config.hidden_size
        return cls(GruCellParams.zeros(D, H), GruCellParams.zeros(D, H), np.zeros((D, H)), np.zeros(D), config)

    def parameters(self) -> dict[str, np.ndarray]:
        """Name -> array, in a fixed order. Arrays are live (not copies)."""
        out = {f"encoder.{k}": v for k, v in self.encoder.arrays().items()}
        out.update({f"decoder.{k}": v for k, v in self.decoder.arrays().items()})
        out["proj.W"] = self.proj_W
        out["proj.b"] = self.proj_b
        return out

    def copy(self) -> "AutoencoderModel":
        return AutoencoderModel(self.encoder.copy(), self.decoder.copy(), self.proj_W.copy(), self.proj_b.copy(), self.config)

    def reconstruct(self, windows: np.ndarray) -> np.ndarray:
        return _forward(self, _as_batch(windows, self.config.input_dim))[0]


@dataclass(frozen=True)
class ErrorSeries:
    timestamps: np.ndarray
    errors: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64)
        err = np.asarray(self.errors, dtype=np.float64)
        if ts.shape != err.shape:
            raise ValueError("timestamps and errors differ in length")
        if np.any(err < 0):
            raise ValueError("errors must be non-negative")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "errors", err)

    def __len__(self) -> int:
        return int(self.errors.shape[0])


def _as_batch(windows, D: int) -> np.ndarray:
    w = np.asarray(windows, dtype=np.float64)
    if w.ndim == 2:
        w = w[None]
    if w.ndim != 3 or w.shape[2] != D:
        raise ValueError(f"windows must be (N, L, {D}), got {w.shape}")
    if w.shape[1] < 1:
        raise ValueError("empty window")
    return w


def encode(window, enc: GruCellParams) -> np.ndarray:
    """Final hidden state of the encoder over an L x D window, from h = 0."""
    w = _as_batch(window, enc.input_size)
    return _encode(w, enc)[0][0]


def decode(latent, L: int, dec: GruCellParams, proj_W, proj_b) -> np.ndarray:
    """L x D reconstruction from a latent vector, in input time order."""
    if L < 1:
        raise ValueError("L must be >= 1")
    latent = np.asarray(latent, dtype=np.float64)
    if latent.shape != (dec.hidden_size,):
        raise ValueError("latent size does not match decoder hidden size")
    recon, _ = _decode(latent[None], L, dec, np.asarray(proj_W, float), np.asarray(proj_b, float))
    return recon[0]


def _encode(w: np.ndarray, enc: GruCellParams):
    B, L, _ = w.shape
    h = np.zeros((B, enc.hidden_size))
    pk = pack(enc)
    caches = []
    for t in range(L):
        h, cache = step(w[:, t], h, pk)
        caches.append(cache)
    return h, caches


def _decode(latent: np.ndarray, L: int, dec: GruCellParams, proj_W: np.ndarray, proj_b: np.ndarray):
    B = latent.shape[0]
    D = dec.input_size
    h = latent
    inp = np.zeros((B, D))
    recon = np.empty((B, L, D))
    caches, states = [], []
    pk = pack(dec)
    proj_W_T = np.ascontiguousarray(proj_W.T)
    for k in range(L):
        h, cache = step(inp, h, pk)
        y = h @ proj_W_T + proj_b
        recon[:, L - 1 - k] = y
        caches.append(cache)
        states.append(h)
        inp = y
    return recon, (caches, states)


def _forward(model: AutoencoderModel, w: np.ndarray):
    latent, enc_caches = _encode(w, model.encoder)
    recon, dec_state = _decode(latent, w.shape[1], model.decoder, model.proj_W, model.proj_b)
    return recon, (enc_caches, dec_state)


def mse_loss(model: AutoencoderModel, windows) -> float:
    w = _as_batch(windows, model.config.input_dim)
    recon = _forward(model, w)[0]
    return float(np.mean((recon - w) ** 2))


def loss_and_grads(model: AutoencoderModel, windows) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared reconstruction error over a batch and its exact
    gradient by backpropagation through time."""
    w = _as_batch(windows, model.config.input_dim)
    B, L, D = w.shape
    recon, (enc_caches, (dec_caches, dec_states)) = _forward(model, w)
    diff = recon - w
    loss = float(np.mean(diff * diff))
    d_recon = diff * (2.0 / diff.size)

    g_W = np.zeros_like(model.proj_W)
    g_b = np.zeros_like(model.proj_b)
    dh = np.zeros((B, model.config.hidden_size))
    d_inp = np.zeros((B, D))
    dec_pk, enc_pk = pack(model.decoder), pack(model.encoder)
    dec_gates = [None] * L
    for k in range(L - 1, -1, -1):
        # output k is both a reconstruction row and the input of step k+1
        dy = d_recon[:, L - 1 - k] + d_inp
        g_W += dy.T @ dec_states[k]
        g_b += dy.sum(axis=0)
        dh = dh + dy @ model.proj_W
        d_inp, dh, dec_gates[k] = step_backward(dec_caches[k], dh, dec_pk)
    enc_gates = [None] * L
    for t in range(L - 1, -1, -1):
        _, dh, enc_gates[t] = step_backward(enc_caches[t], dh, enc_pk)
    g_enc = param_grads(enc_caches, enc_gates)
    g_dec = param_grads(dec_caches, dec_gates)

    grads = {f"encoder.{k}": g_enc[k] for k in GATE_PARAMS}
    grads.update({f"decoder.{k}": g_dec[k] for k in GATE_PARAMS})
    grads["proj.W"] = g_W
    grads["proj.b"] = g_b
    return loss, grads


def gradient_check(model: AutoencoderModel, window, eps: float = 1e-5, grad_fn=None, floor: float = 1e-6) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The relative gap per entry is ``|a - n| / max(|a|, |n|, floor)``.
    ``grad_fn`` replaces ``loss_and_grads`` for the analytic side, which
    lets a deliberately broken gradient be checked.
    """
    if not 0 < eps <= 1e-2:
        raise ValueError("eps must lie in (0, 1e-2]")
    w = _as_batch(window, model.config.input_dim)
    probe = model.copy()
    _, analytic = (grad_fn or loss_and_grads)(probe, w)
    worst = 0.0
    for name, arr in probe.parameters().items():
        a_grad = analytic[name]
        flat = arr.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            up = mse_loss(probe, w)
            flat[i] = orig - eps
            down = mse_loss(probe, w)
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = float(a_grad.reshape(-1)[i])
            gap = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            worst = max(worst, gap)
    return worst


def reconstruction_errors(model: AutoencoderModel, series: TimeSeries, batch: int = 1024) -> ErrorSeries:
    """Score every timestep ``t >= L - 1`` by the RMS residual of the last
    row of the window ending at ``t``."""
    cfg = model.config
    if series.dim != cfg.input_dim:
        raise ValueError(f"dimension mismatch: model expects {cfg.input_dim} dims, series has {series.dim}")
    ds = make_windows(series, cfg.window_length, 1)
    out = np.empty(len(ds))
    for start in range(0, len(ds), batch):
        w = ds.windows[start:start + batch]
        recon = _forward(model, w)[0]
        resid = recon[:, -1, :] - w[:, -1, :]
        out[start:start + batch] = np.sqrt(np.mean(resid * resid, axis=1))
    return ErrorSeries(series.timestamps[cfg.window_length - 1:], out)
