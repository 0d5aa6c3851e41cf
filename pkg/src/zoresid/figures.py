"""Matplotlib rendering of run curves and sweep scalings to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_gap_curves", "plot_sweep"]


def plot_gap_curves(records, path, title: str = "") -> Path:
    """Semilog f-gap (or mean grad^2) trajectories, one line per seed."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for rec in records:
        y = rec.grad_norm_sq if getattr(rec, "grad_metric", False) else rec.f_gap
        y = np.maximum(np.asarray(y, dtype=float), np.finfo(float).tiny)
        ax.semilogy(rec.t, y, lw=0.9, alpha=0.8, label=f"seed {rec.seed}")
    ax.set_xlabel("iteration t")
    ax.set_ylabel("f(x_t) - f*")
    if title:
        ax.set_title(title)
    if len(records) <= 8:
        ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def plot_sweep(xs, ys, path, xlabel: str, ylabel: str = "T_eps", slope: float | None = None,
               title: str = "") -> Path:
    """Log-log scatter of the sweep cells with the fitted power law."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.loglog(xs, ys, "o", ms=6)
    if slope is not None and xs.size >= 2:
        c = np.exp(np.mean(np.log(ys) - slope * np.log(xs)))
        grid = np.geomspace(xs.min(), xs.max(), 50)
        ax.loglog(grid, c * grid**slope, "--", lw=1.2, label=f"fit slope {slope:.2f}")
        ax.legend(fontsize=9)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
