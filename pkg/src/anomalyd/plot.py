"""Multi-panel SVG of a detection run.

One panel per input dimension, then a panel overlaying reconstruction
error, likelihood and flagged points. The x-axis is the record index.
"""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from anomalyd.ingest import DetectionRecord  # noqa: E402

FLAG_COLOR = "red"


def render_svg(records: Sequence[DetectionRecord], dim_names: Sequence[str] | None = None, threshold: float | None = None) -> str:
    """SVG text. Axes carry gids ``panel-<k>`` so consumers can count them;
    flag markers carry ``flags-<k>``."""
    if not records:
        raise ValueError("empty input")
    D = len(records[0].raw_values)
    names = list(dim_names) if dim_names is not None else ([f"value{k}" for k in range(D)] if D > 1 else ["value"])
    if len(names) != D:
        raise ValueError("dim_names does not match the records")
    idx = np.arange(len(records))
    values = np.array([r.raw_values for r in records], dtype=float).reshape(len(records), D)
    err = np.array([r.error for r in records])
    lik = np.array([r.likelihood for r in records])
    flagged = np.array([r.flagged for r in records], dtype=bool)

    with plt.rc_context({"svg.hashsalt": "anomalyd", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(D + 1, 1, sharex=True, figsize=(10, 2.2 * (D + 1)), squeeze=False)
        axes = axes[:, 0]
        for k in range(D):
            ax = axes[k]
            ax.set_gid(f"panel-{k}")
            ax.plot(idx, values[:, k], color="tab:blue", lw=0.8, marker="." if len(idx) == 1 else None)
            ax.set_ylabel(names[k])
            if flagged.any():
                m = ax.scatter(idx[flagged], values[flagged, k], color=FLAG_COLOR, s=10, zorder=3)
                m.set_gid(f"flags-{k}")

        ax = axes[D]
        ax.set_gid(f"panel-{D}")
        ax.plot(idx, err, color="tab:green", lw=0.8, label="error", marker="." if len(idx) == 1 else None)
        ax.set_ylabel("error")
        twin = ax.twinx()
        twin.plot(idx, lik, color="tab:orange", lw=0.8, label="likelihood", marker="." if len(idx) == 1 else None)
        twin.set_ylim(-0.02, 1.02)
        twin.set_ylabel("likelihood")
        if threshold is not None:
            twin.axhline(threshold, color="gray", ls="--", lw=0.6)
        if flagged.any():
            m = twin.scatter(idx[flagged], lik[flagged], color=FLAG_COLOR, s=10, zorder=3)
            m.set_gid(f"flags-{D}")
        ax.set_xlabel("index")
        fig.tight_layout()

        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


def count_panels(svg: str) -> int:
    return svg.count('id="panel-')
