"""Figure rendering for the report path (PNG files next to the CSVs)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 110, "metadata": {"Software": None}}


def save_run_figure(report, path) -> None:
    """Cumulative cost/reward and budget counters over the horizon."""
    t = np.arange(1, report.horizon + 1)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(t, np.cumsum(report.costs), lw=1.2)
    label = "cumulative reward" if report.meta.get("direction") == "concave" else "cumulative cost"
    ax1.set_xlabel("round")
    ax1.set_ylabel(label)
    for i in range(report.queue.shape[1]):
        ax2.plot(t, report.queue[:, i], lw=1.2, label=f"resource {i}")
    if report.meta.get("B_T") is not None:
        ax2.axhline(float(report.meta["B_T"]), color="gray", ls="--", lw=0.8, label="budget")
    ax2.set_xlabel("round")
    ax2.set_ylabel("consumed")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_summary_figure(rows, path) -> None:
    """Mean regret against horizon on log-log axes."""
    horizons = sorted({int(r["T"]) for r in rows})
    means = [np.mean([r["regret"] for r in rows if r["T"] == T]) for T in horizons]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    positive = all(m > 0 for m in means)
    if positive:
        ax.loglog(horizons, means, "o-")
    else:
        ax.semilogx(horizons, means, "o-")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("mean regret")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_scaling_figure(fit, path) -> None:
    """Per-horizon means with the fitted growth exponent."""
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    means = np.asarray(fit.means, dtype=float)
    if np.all(means > 0):
        ax.loglog(fit.horizons, means, "o", label="mean regret")
        x = np.asarray(fit.horizons, dtype=float)
        anchor = means[0] / x[0] ** fit.slope
        ax.loglog(x, anchor * x**fit.slope, "--", label=f"slope {fit.slope:.3f}")
    else:
        ax.semilogx(fit.horizons, means, "o", label="mean regret")
    ax.errorbar(fit.horizons, means, yerr=fit.std_errs, fmt="none", ecolor="gray")
    ax.set_xlabel("horizon T")
    ax.set_ylabel("mean regret")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def save_lowerbound_figure(rows, path) -> None:
    """Empirical budget factor per phase index, with ln T for comparison."""
    taus = [r["tau"] for r in rows]
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(taus, [r["kappa_hat"] for r in rows], "o-", label="kappa-hat")
    ax.axhline(rows[0]["ln_T"], color="gray", ls="--", lw=0.8, label="ln T")
    ax.set_xlabel("phase index tau")
    ax.set_ylabel("budget factor")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
