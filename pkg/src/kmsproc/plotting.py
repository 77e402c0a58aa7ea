"""Figures for the ``report`` command (matplotlib, file output only)."""
from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_kernel(s, values, path, title: str = ""):
    """``S(f,f;s)`` over one period."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(s, values, lw=1.5)
    ax.set_xlabel("s")
    ax.set_ylabel("S(f, f; s)")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_covariance(lags, estimate, se, exact, path, title: str = ""):
    """Empirical covariance with 4 SE bars against the exact curve."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(lags, exact, lw=1.5, label="exact")
    ax.errorbar(lags, estimate, yerr=4 * np.asarray(se), fmt="o", ms=3, label="sampled (4 SE)")
    ax.set_xlabel("lag")
    ax.set_ylabel("covariance")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_checks(names, residuals, tolerances, path, title: str = ""):
    """Residuals against tolerances on a log scale."""
    plt = _pyplot()
    res = np.maximum(np.asarray(residuals, dtype=float), 1e-18)
    tol = np.maximum(np.asarray(tolerances, dtype=float), 1e-18)
    y = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(6, 0.35 * len(names) + 1.2))
    ax.scatter(res, y, marker="o", label="residual")
    ax.scatter(tol, y, marker="|", s=200, label="tolerance")
    ax.set_xscale("log")
    ax.set_yticks(y)
    ax.set_yticklabels(names)
    ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
