"""Static SVG figures for ratio curves and degree distributions."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_ratio_curve(curve, path, exact=None, reference=None, title=None):
    """``R(n)`` with error bars; ``exact`` maps n to census ratios, ``reference`` is a horizontal line."""
    ns = sorted(curve)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ns, [curve[n].mean for n in ns], yerr=[curve[n].stderr for n in ns],
                fmt="o", ms=3, capsize=2, label="estimate")
    if exact:
        ks = sorted(exact)
        ax.plot(ks, [exact[k] for k in ks], "x", color="k", label="census")
    if reference is not None:
        ax.axhline(reference, ls="--", color="grey", lw=1)
    ax.set_xlabel("n")
    ax.set_ylabel("R(n)")
    if title:
        ax.set_title(title)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_degrees(stats, path, n=None, sigma_kappas=(1, 2, 3)):
    """``P(kappa)`` on a log scale at size ``n`` and, beside it, sigma against n."""
    sizes = stats.sizes()
    n = sizes[-1] if n is None else n
    dist = stats.distribution(n)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ks = [k for k in dist if dist[k] > 0]
    ax1.semilogy(ks, [dist[k] for k in ks], "o-", ms=3)
    ax1.set_xlabel("kappa")
    ax1.set_ylabel(f"P(kappa), n={n}")
    for k in sigma_kappas:
        pts = [(m, stats.sigma[m][k]) for m in sizes if k in stats.sigma[m] and stats.count[m] > 1]
        if pts:
            ax2.plot([p[0] for p in pts], [p[1] for p in pts], ".", label=f"kappa={k}")
    ax2.set_xlabel("n")
    ax2.set_ylabel("sigma of N(kappa)/f1")
    ax2.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
