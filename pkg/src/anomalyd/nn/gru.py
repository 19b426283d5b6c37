"""GRU cell in float64 numpy, with a batched step and its exact backward pass.

    z = sigmoid(W_z x + U_z h + b_z)
    r = sigmoid(W_r x + U_r h + b_r)
    c = tanh(W_h x + U_h (r * h) + b_h)
    h' = (1 - z) * h + z * c
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import NamedTuple

import numpy as np
from scipy.special import expit as sigmoid

GATE_PARAMS = ("W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h")


@dataclass
class GruCellParams:
    W_z: np.ndarray
    U_z: np.ndarray
    b_z: np.ndarray
    W_r: np.ndarray
    U_r: np.ndarray
    b_r: np.ndarray
    W_h: np.ndarray
    U_h: np.ndarray
    b_h: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name, np.asarray(getattr(self, f.name), dtype=np.float64))
        H, D = self.W_z.shape
        for gate in "zrh":
            if getattr(self, f"W_{gate}").shape != (H, D):
                raise ValueError(f"W_{gate} must be {H}x{D}")
            if getattr(self, f"U_{gate}").shape != (H, H):
                raise ValueError(f"U_{gate} must be {H}x{H}")
            if getattr(self, f"b_{gate}").shape != (H,):
                raise ValueError(f"b_{gate} must have length {H}")

    @property
    def hidden_size(self) -> int:
        return self.W_z.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_z.shape[1]

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "GruCellParams":
        H, D = hidden_size, input_size
        return cls(*[np.zeros(_shape(name, H, D)) for name in GATE_PARAMS])

    @classmethod
    def uniform(cls, input_size: int, hidden_size: int, rng: np.random.Generator, scale: float) -> "GruCellParams":
        H, D = hidden_size, input_size
        return cls(*[rng.uniform(-scale, scale, size=_shape(name, H, D)) for name in GATE_PARAMS])

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in GATE_PARAMS}

    def copy(self) -> "GruCellParams":
        return GruCellParams(*[getattr(self, name).copy() for name in GATE_PARAMS])


def _shape(name: str, H: int, D: int) -> tuple[int, ...]:
    if name[0] == "W":
        return (H, D)
    if name[0] == "U":
        return (H, H)
    return (H,)


class Packed(NamedTuple):
    """Gate weights stacked z, r, h so a step needs two input matmuls."""

    W_T: np.ndarray  # (D, 3H)
    U_zr_T: np.ndarray  # (H, 2H)
    U_h: np.ndarray  # (H, H)
    U_h_T: np.ndarray
    b: np.ndarray  # (3H,)
    W: np.ndarray  # (3H, D)
    U_zr: np.ndarray  # (2H, H)


def pack(p: GruCellParams) -> Packed:
    W = np.concatenate([p.W_z, p.W_r, p.W_h])
    U_zr = np.concatenate([p.U_z, p.U_r])
    return Packed(
        np.ascontiguousarray(W.T), np.ascontiguousarray(U_zr.T), p.U_h,
        np.ascontiguousarray(p.U_h.T), np.concatenate([p.b_z, p.b_r, p.b_h]), W, U_zr,
    )


def step(x: np.ndarray, h: np.ndarray, pk: Packed):
    """One batched step. ``x`` is (B, D), ``h`` is (B, H).

    Returns the new state and the cache needed by ``step_backward``.
    """
    H = h.shape[1]
    a = x @ pk.W_T + pk.b
    zr = sigmoid(a[:, : 2 * H] + h @ pk.U_zr_T)
    z, r = zr[:, :H], zr[:, H:]
    rh = r * h
    c = np.tanh(a[:, 2 * H:] + rh @ pk.U_h_T)
    h_new = h + z * (c - h)
    return h_new, (x, h, z, r, rh, c)


def step_backward(cache, dh_new: np.ndarray, pk: Packed):
    """Backward through one step.

    Returns ``(dx, dh_prev, da)`` where ``da`` is the (B, 3H) stacked
    pre-activation gradient consumed by ``param_grads``.
    """
    x, h, z, r, rh, c = cache
    H = h.shape[1]
    da = np.empty((h.shape[0], 3 * H))
    da_h = dh_new * z * (1.0 - c * c)
    d_rh = da_h @ pk.U_h
    da[:, :H] = dh_new * (c - h) * z * (1.0 - z)
    da[:, H: 2 * H] = d_rh * h * r * (1.0 - r)
    da[:, 2 * H:] = da_h
    dx = da @ pk.W
    dh = dh_new * (1.0 - z) + d_rh * r + da[:, : 2 * H] @ pk.U_zr
    return dx, dh, da


def param_grads(caches, gates) -> dict[str, np.ndarray]:
    """Parameter gradients summed over every step and batch row at once."""
    x = np.concatenate([c[0] for c in caches])
    h = np.concatenate([c[1] for c in caches])
    rh = np.concatenate([c[4] for c in caches])
    da = np.concatenate(gates)
    H = h.shape[1]
    dW = da.T @ x
    dU_zr = da[:, : 2 * H].T @ h
    db = da.sum(axis=0)
    return {
        "W_z": dW[:H], "U_z": dU_zr[:H], "b_z": db[:H],
        "W_r": dW[H: 2 * H], "U_r": dU_zr[H:], "b_r": db[H: 2 * H],
        "W_h": dW[2 * H:], "U_h": da[:, 2 * H:].T @ rh, "b_h": db[2 * H:],
    }


def gru_cell_forward(x, h_prev, p: GruCellParams) -> np.ndarray:
    """Single (unbatched) GRU step on vectors."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    if x.shape != (p.input_size,):
        raise ValueError(f"input must have shape ({p.input_size},), got {x.shape}")
    if h_prev.shape != (p.hidden_size,):
        raise ValueError(f"hidden state must have shape ({p.hidden_size},), got {h_prev.shape}")
    h_new, _ = step(x[None, :], h_prev[None, :], pack(p))
    return h_new[0]
