"""Figures written next to the CSV reports (PNG via the Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy import stats  # noqa: E402

plt.rcParams.update({
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 120,
})


def ber_curve(snr_db, ber, path, theory=None, title="BER vs SNR"):
    """Semilog BER curve; zero-BER points are dropped from the log axis."""
    snr_db = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    keep = ber > 0
    ax.semilogy(snr_db[keep], ber[keep], "o-", label="measured")
    if theory is not None:
        ax.semilogy(snr_db, theory, "k--", lw=1, label="theory")
        ax.legend()
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("BER")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def grades_overview(x, y, slope, offset, impacts, fit, path, xlabel="EX_aver", ylabel="LAB3"):
    """Scatter with trend line (left) and impact histogram with normal fit (right)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.2))
    ax1.scatter(x, y, s=12)
    xs = np.linspace(0, 10, 50)
    ax1.plot(xs, slope * xs + offset, "r-", lw=1,
             label=f"y = {slope:.2f}x + {offset:.2f}")
    ax1.set_xlim(0, 10)
    ax1.set_ylim(0, 10)
    ax1.set_xlabel(xlabel)
    ax1.set_ylabel(ylabel)
    ax1.legend(loc="upper left")

    width = np.diff(fit.edges)
    ax2.bar(fit.edges[:-1], fit.counts, width=width, align="edge", alpha=0.7)
    grid = np.linspace(fit.edges[0], fit.edges[-1], 200)
    scale = len(impacts) * (width[0] if width.size and width[0] > 0 else 1.0)
    if fit.std > 0:
        ax2.plot(grid, stats.norm.pdf(grid, fit.mean, fit.std) * scale, "r-", lw=1)
    ax2.set_xlabel("impact I")
    ax2.set_ylabel("students")
    ax2.set_title(f"mean {fit.mean:.3f}, std {fit.std:.3f}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
