"""Success-rate figures for SNR sweeps, rendered off-screen to image files."""
from __future__ import annotations

from pathlib import Path
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import SimReport  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "legend.fontsize": 8,
    "savefig.dpi": 150,
}


def plot_sweep(reports: Mapping[str, SimReport] | SimReport, path: str | Path,
               title: str | None = None) -> Path:
    """Plot success rate against SNR for one or more labelled reports and save to ``path``."""
    if isinstance(reports, SimReport):
        reports = {"success rate": reports}
    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for label, report in reports.items():
            snr = [r.snr_db for r in report.rows]
            rate = [r.success_rate for r in report.rows]
            ax.plot(snr, rate, marker="o", ms=3, label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        if title:
            ax.set_title(title)
        if len(reports) > 1:
            ax.legend(loc="lower right")
        fig.tight_layout()
        # fixed metadata keeps repeated renders byte-identical
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path
