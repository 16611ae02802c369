"""Matplotlib figures for cycle, relaxation, work-distribution and sweep reports.

Every function draws into a fresh figure, writes it to ``path`` and closes
it; nothing is shown interactively.
"""
import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .accounting import cumulative_heat, cumulative_work  # noqa: E402
from .core import gibbs_state, relative_entropy  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figsize(width=6.4, ratio=None):
    if ratio is None:
        ratio = (math.sqrt(5) - 1.0) / 2.0
    return width, width * ratio


def _save(fig, path):
    # no timestamps or version strings so reruns give the same bytes
    fig.savefig(path, metadata={"Software": None} if str(path).endswith(".png") else None)
    plt.close(fig)


def plot_cycle(report, path, title=""):
    """Gap/population diagram of a cycle next to the cumulative energy ledgers."""
    traj = report.trajectory
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=figsize(7.0, 0.45))
        ax1.plot(traj.gaps, traj.excited_populations, "-", color="k", lw=1)
        ax1.plot(traj.gaps[0], traj.excited_populations[0], "o", color="C3", ms=4, label="start")
        ax1.set_xlabel(r"gap $\omega$")
        ax1.set_ylabel(r"excited population $p$")
        ax1.legend(frameon=False)
        k = np.arange(len(traj))
        ax2.plot(k, cumulative_work(traj), label="W (cumulative)")
        ax2.plot(k, cumulative_heat(traj), label="Q (cumulative)")
        ax2.axhline(0.0, color="0.7", lw=0.5)
        ax2.set_xlabel("sample")
        ax2.set_ylabel("energy")
        ax2.legend(frameon=False)
        fig.suptitle(title or f"W_ext = {report.extracted_work:.6g}, eta = {report.efficiency:.6g}")
        fig.tight_layout()
        _save(fig, path)


def plot_relaxation(traj, h, temperature, path):
    """Excited population and relative entropy to the Gibbs state during a thermal stroke."""
    gibbs = gibbs_state(h, temperature)
    d = [relative_entropy(rho, gibbs) for rho in traj.states]
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=figsize(5.0, 0.9))
        ax1.plot(traj.times, traj.excited_populations, color="k", lw=1)
        ax1.axhline(gibbs.excited_population, ls="--", color="C3", lw=0.8, label="Gibbs")
        ax1.set_ylabel(r"$p_{\mathrm{exc}}$")
        ax1.legend(frameon=False)
        ax2.semilogy(traj.times, np.maximum(d, 1e-300), color="C0", lw=1)
        ax2.set_xlabel("t")
        ax2.set_ylabel(r"$S(\rho\,\|\,\rho_{\mathrm{th}})$")
        fig.tight_layout()
        _save(fig, path)


def plot_work_distribution(dist, result, path):
    outcomes = dist.collapsed()
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(4.5))
        ax.stem([w for w, _ in outcomes], [p for _, p in outcomes], basefmt=" ")
        ax.axvline(result.delta_f, ls="--", color="C3", lw=0.8, label=r"$\Delta F$")
        ax.axvline(result.mean_work, ls=":", color="C2", lw=0.8, label=r"$\langle W\rangle$")
        ax.set_xlabel("work W")
        ax.set_ylabel("probability")
        ax.set_title(f"<exp(-bW)> = {result.lhs:.6g}, exp(-b dF) = {result.rhs:.6g}")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)


def plot_sweep(points, path):
    """Efficiency against the gap ratio, with each point's Carnot bound."""
    done = [pt for pt in points if pt.report is not None]
    ratio = np.array([pt.params["omega_c"] / pt.params["omega_h"] for pt in done])
    eta = np.array([pt.report.efficiency for pt in done])
    bound = np.array([pt.eta_carnot for pt in done])
    engine = np.array([pt.engine for pt in done], dtype=bool)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figsize(5.0))
        if engine.any():
            ax.plot(ratio[engine], eta[engine], "o", ms=3, color="C0", label="engine")
        if (~engine).any():
            ax.plot(ratio[~engine], eta[~engine], "x", ms=3, color="0.5", label="not an engine")
        ax.plot(ratio, bound, "_", ms=6, color="C3", label=r"$\eta_{\mathrm{Carnot}}$")
        ax.set_xlabel(r"$\omega_c/\omega_h$")
        ax.set_ylabel(r"$\eta$")
        ax.legend(frameon=False)
        fig.tight_layout()
        _save(fig, path)
