"""Study outputs: plot-ready histogram files and rendered figures.

The simulate command writes, for each statistic, a 20-bin histogram CSV
(`bin_low,bin_high,count`) that can re-plot the p-value panels, plus a
rendered PNG of the same histograms for quick inspection.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .scenarios import HISTOGRAM_BINS, StudyResult


def write_histogram_csv(result: StudyResult, path: str | Path) -> None:
    """Write the p-value histogram as bin_low,bin_high,count rows."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["bin_low", "bin_high", "count"])
        for i, count in enumerate(result.histogram):
            writer.writerow(
                [f"{i / HISTOGRAM_BINS:.2f}", f"{(i + 1) / HISTOGRAM_BINS:.2f}", count]
            )


def render_study_figure(studies: dict[str, StudyResult], path: str | Path) -> None:
    """Render the per-statistic p-value histograms to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(studies)
    fig, axes = plt.subplots(
        1, len(names), figsize=(4.0 * len(names), 3.2), squeeze=False, sharey=True
    )
    edges = [i / HISTOGRAM_BINS for i in range(HISTOGRAM_BINS)]
    for ax, name in zip(axes[0], names):
        result = studies[name]
        ax.bar(
            edges,
            result.histogram,
            width=1.0 / HISTOGRAM_BINS,
            align="edge",
            color="0.75",
            edgecolor="black",
            linewidth=0.5,
        )
        ax.axhline(
            result.datasets / HISTOGRAM_BINS, color="black", linestyle=":", linewidth=0.8
        )
        ax.set_xlim(0, 1)
        ax.set_xlabel("p-value")
        ax.set_title(
            f"{result.scenario}: {name}  (reject at {result.alpha:g}: "
            f"{result.rejection_rate:.3f})",
            fontsize=9,
        )
    axes[0][0].set_ylabel("count")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
