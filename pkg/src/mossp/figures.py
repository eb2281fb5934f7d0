"""Convergence figures rendered from metrics files.

Plots objective value and constraint violation against cumulative stochastic
oracle calls, one curve per metrics file, and writes them as PNG next to the
delimited output.  Rendering is headless (Agg backend).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .metrics import read_metrics


def render_metrics_figures(metric_files: Sequence[str | Path], out_prefix: str | Path,
                           labels: Sequence[str] | None = None) -> list[Path]:
    """Write ``<prefix>_objective.png`` and ``<prefix>_violation.png``."""
    out_prefix = Path(out_prefix)
    if labels is None:
        labels = [Path(p).stem for p in metric_files]
    curves = [read_metrics(p) for p in metric_files]

    written = []
    specs = [
        ("objective", "objective value", lambda r: r.objective, "linear"),
        ("violation", "constraint violation", lambda r: max(r.feas, 1e-16), "log"),
    ]
    for tag, ylabel, pick, yscale in specs:
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for recs, label in zip(curves, labels):
            ax.plot([r.oracle_calls for r in recs], [pick(r) for r in recs],
                    label=label, linewidth=1.2)
        ax.set_xlabel("stochastic oracle calls")
        ax.set_ylabel(ylabel)
        ax.set_yscale(yscale)
        if len(curves) > 1:
            ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        path = out_prefix.parent / f"{out_prefix.name}_{tag}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written
