"""JSON checkpoint: config, row-major parameters, normalization constants.

Floats are written with ``repr`` precision, so a read after a write gives
back the exact same bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from anomalyd.nn.autoencoder import AutoencoderConfig, AutoencoderModel
from anomalyd.nn.gru import GATE_PARAMS, GruCellParams
from anomalyd.timeseries import NormalizationParams

FORMAT = "anomalyd-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    model: AutoencoderModel
    normalization: NormalizationParams | None = None
    dim_names: tuple[str, ...] | None = None


def _pack(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.reshape(-1)]}


def _unpack(d: dict) -> np.ndarray:
    return np.array(d["data"], dtype=np.float64).reshape(d["shape"])


def dumps(ckpt: Checkpoint) -> str:
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": ckpt.model.config.to_dict(),
        "dim_names": list(ckpt.dim_names) if ckpt.dim_names is not None else None,
        "normalization": None if ckpt.normalization is None else {
            "min": [float(v) for v in ckpt.normalization.minimum],
            "max": [float(v) for v in ckpt.normalization.maximum],
        },
        "params": {k: _pack(v) for k, v in ckpt.model.parameters().items()},
    }
    return json.dumps(doc, indent=1) + "\n"


def loads(text: str) -> Checkpoint:
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError("not an anomalyd checkpoint")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')}")
    config = AutoencoderConfig(**doc["config"])
    p = {k: _unpack(v) for k, v in doc["params"].items()}
    enc = GruCellParams(*[p[f"encoder.{k}"] for k in GATE_PARAMS])
    dec = GruCellParams(*[p[f"decoder.{k}"] for k in GATE_PARAMS])
    model = AutoencoderModel(enc, dec, p["proj.W"], p["proj.b"], config)
    norm = doc.get("normalization")
    if norm is not None:
        norm = NormalizationParams(norm["min"], norm["max"])
    names = doc.get("dim_names")
    return Checkpoint(model, norm, tuple(names) if names is not None else None)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    Path(path).write_text(dumps(ckpt), encoding="utf-8")


def load_checkpoint(path) -> Checkpoint:
    return loads(Path(path).read_text(encoding="utf-8"))
