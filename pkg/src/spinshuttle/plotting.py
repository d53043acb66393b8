"""SVG result plots (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def line_plot(path, x, series, xlabel, ylabel, title, logy=False, xlog=False):
    """series: list of (label, y-array)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for label, y in series:
        ax.plot(x, y, marker="o", label=label)
    if logy:
        ax.set_yscale("log")
    if xlog:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def paired_scatter(path, labels, baseline_groups, optimized_groups, ylabel, title,
                   threshold=None):
    """Per-group point clouds for baseline vs optimized distributions."""
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    rng = np.random.default_rng(0)  # jitter only, cosmetic
    for i, (base, opt) in enumerate(zip(baseline_groups, optimized_groups)):
        xb = i - 0.18 + 0.08 * rng.standard_normal(len(base))
        xo = i + 0.18 + 0.08 * rng.standard_normal(len(opt))
        ax.semilogy(xb, base, ".", color="tab:orange", ms=4,
                    label="baseline" if i == 0 else None)
        ax.semilogy(xo, opt, ".", color="tab:blue", ms=4,
                    label="optimized" if i == 0 else None)
    if threshold is not None:
        ax.axhline(threshold, color="tab:red", ls="--", lw=1, label="threshold")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
