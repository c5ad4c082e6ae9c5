"""Figures written next to benchmark records."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .bench import SummaryRow  # noqa: E402


def plot_summary(rows: Sequence[SummaryRow], path: str | Path, metric: str = "gap") -> bool:
    """Grouped bars of the mean per class and subject with 95% error bars.

    Returns False (and writes nothing) when there are no rows for ``metric``.
    """
    rows = [r for r in rows if r.metric == metric]
    if not rows:
        return False
    classes = sorted({r.class_label for r in rows})
    subjects = sorted({r.subject for r in rows})
    width = 0.8 / len(subjects)
    fig, ax = plt.subplots(figsize=(max(5.0, 1.4 * len(classes) + 2), 3.5))
    for k, s in enumerate(subjects):
        xs, means, errs = [], [], [[], []]
        for c, cls in enumerate(classes):
            hit = [r for r in rows if r.class_label == cls and r.subject == s]
            if not hit:
                continue
            r = hit[0]
            xs.append(c + (k - (len(subjects) - 1) / 2) * width)
            means.append(r.mean)
            errs[0].append(r.mean - r.lo)
            errs[1].append(r.hi - r.mean)
        ax.bar(xs, means, width, yerr=errs, capsize=3, label=s)
    ax.set_xticks(range(len(classes)))
    ax.set_xticklabels(classes, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("mean relative gap" if metric == "gap" else "mean PI (%)")
    ax.axhline(0, color="black", linewidth=0.6)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return True
