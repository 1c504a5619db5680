"""Figure rendering for benchmark reports.

Every report command writes delimited data first; these helpers render the
matching figures to files next to it.  The Agg backend keeps rendering
headless-safe.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .bench import CdfResult, ProfileResult

__all__ = ["cost_ratio_figure", "gap_cdf_figure", "profile_figure"]


def profile_figure(
    result: ProfileResult, labels: list[str], metric: str, path: str
) -> str:
    """Step plot of the performance profile, one curve per solver."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    taus = result.taus
    for j, label in enumerate(labels):
        ax.step(taus, result.rho[:, j], where="post", label=label)
    ax.set_xlabel(r"cost ratio $\tau$")
    ax.set_ylabel("fraction of problems")
    ax.set_title(f"performance profile ({metric}, {result.n_problems} problems)")
    ax.set_ylim(0.0, 1.05)
    if taus.size and taus[-1] > 1.0:
        ax.set_xlim(1.0, float(taus[-1]) * 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def gap_cdf_figure(result: CdfResult, labels: list[str], path: str) -> str:
    """Step plot of the relative-gap CDF, one curve per solver."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for j, label in enumerate(labels):
        ax.step(result.levels, result.cdf[:, j], where="post", label=label)
    ax.set_xlabel("relative gap to best solver value")
    ax.set_ylabel("fraction of problems")
    ax.set_title("relative-gap CDF")
    ax.set_ylim(0.0, 1.05)
    if result.levels.size and result.levels[-1] > 0:
        ax.set_xscale("symlog", linthresh=1e-8)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def cost_ratio_figure(
    per_problem: list[tuple[str, int, float]], path: str
) -> str:
    """Distribution of gradient/objective time ratios per dimension."""
    by_n: dict[int, list[float]] = {}
    for _, n, ratio in per_problem:
        by_n.setdefault(n, []).append(ratio)
    dims = sorted(by_n)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.boxplot([by_n[n] for n in dims])
    ax.set_xticks(range(1, len(dims) + 1), [str(n) for n in dims])
    ax.set_xlabel("continuous dimension n")
    ax.set_ylabel("gradient time / objective time")
    ax.set_title("gradient cost ratios")
    ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
