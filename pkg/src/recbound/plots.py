"""Figure rendering for the report path.

Matplotlib is imported lazily so analyses that do not ask for figures never
pay for it.  Figures are a visual companion to the delimited output, not part
of the determinism contract (the CSV and report bytes are).
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_envelope_figure(samples: np.ndarray, path: str, *, title: str,
                           bound: float | None = None, ylabel: str = "|S(n)|") -> None:
    """Log-log envelope of |partial sums| (or |trajectory|) against n."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ns = samples[:, 0]
    vals = np.maximum(samples[:, 1], 1e-18)
    ax.loglog(ns, vals, lw=0.9, color="#1f4e79")
    if bound is not None and bound > 0:
        ax.axhline(bound, color="#b03030", lw=1.0, ls="--", label=f"certified bound {bound:.4g}")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("n")
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(True, which="both", alpha=0.25)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_sweep_figure(params: list[float], sups: list[float], betas: list[float],
                        path: str, *, parameter: str, title: str) -> None:
    """Sup norm and fitted growth exponent against the sweep parameter."""
    plt = _pyplot()
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7.0, 6.0), sharex=True)
    ax1.plot(params, sups, "o-", color="#1f4e79", lw=1.0)
    ax1.set_yscale("log")
    ax1.set_ylabel("sup |S|")
    ax1.grid(True, alpha=0.25)
    ax1.set_title(title, fontsize=10)
    ax2.plot(params, betas, "s-", color="#b06010", lw=1.0)
    ax2.set_ylabel("growth exponent")
    ax2.set_xlabel(parameter)
    ax2.grid(True, alpha=0.25)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
