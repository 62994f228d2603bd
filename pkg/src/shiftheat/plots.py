"""Figure rendering for the report path (matplotlib, file output only)."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["spectrum_figure", "solution_figure", "comparison_figure",
           "traces_figure", "contours_figure"]


def spectrum_figure(records, meta, path):
    fig, ax = plt.subplots(figsize=(5, 6))
    mus = np.array([r.mu for r in records])
    seeds = np.array([r.seed for r in records])
    ax.scatter(mus.real, mus.imag, marker="x", c="C0", s=60, label="located")
    ax.scatter(seeds.real, seeds.imag, marker="+", c="C3", s=40, label="seeds")
    for hh in (-meta.h, meta.h):
        ax.axvline(hh, color="0.7", lw=0.8, ls="--")
    if meta.zero_multiplicity:
        ax.scatter([0], [0], marker="o", facecolors="none", edgecolors="C2",
                   s=80, label=f"zero group (chi={meta.zero_multiplicity})")
    ax.set_xlabel("Re mu")
    ax.set_ylabel("Im mu")
    ax.set_title("determinant zeros and asymptotic seeds")
    ax.legend(loc="best", fontsize=8)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def solution_figure(grids, path, labels=None):
    """Overlay u(x, t_j) curves for one or more solution grids."""
    grids = grids if isinstance(grids, (list, tuple)) else [grids]
    labels = labels or [g.method for g in grids]
    fig, ax = plt.subplots(figsize=(6, 4))
    styles = ["-", "--", ":", "-."]
    for g, lab, st in zip(grids, labels, styles):
        for j, t in enumerate(g.t):
            ax.plot(g.x, g.u[j], st, lw=1.2,
                    label=f"{lab}, t={t:g}" if j in (0, len(g.t) - 1) else None)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.set_title("solution snapshots")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def comparison_figure(report, path, title="method difference per slice"):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ts = [t for t, _ in report.slices]
    es = [max(e, 1e-18) for _, e in report.slices]
    ax.semilogy(ts, es, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel("sup |difference|")
    ax.set_title(title)
    ax.grid(alpha=0.25, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def traces_figure(traces, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for s, color in ((0, "C0"), (1, "C1")):
        for k in range(1, traces.k_segments + 1):
            tt = traces.segment_times(k)
            gg = (traces.seg0 if s == 0 else traces.seg1)[k - 1]
            ax.plot(tt, gg, color=color, lw=1.3,
                    label=f"gamma_{s}" if k == 1 else None)
            # right-limit marker at the segment opening
            ax.plot([(k - 1) * traces.omega], [traces.starts[k - 1][s]],
                    marker=".", color=color, ms=6)
    for tk, j0, j1 in traces.jumps:
        ax.axvline(tk, color="0.8", lw=0.8, ls=":")
    ax.set_xlabel("t")
    ax.set_ylabel("boundary value")
    ax.set_title("endpoint traces and shift-recursion jumps")
    ax.legend()
    ax.grid(alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def contours_figure(rules, path, labels=None):
    fig, ax = plt.subplots(figsize=(5, 5))
    labels = labels or [f"path {k}" for k in range(len(rules))]
    for rule, lab in zip(rules, labels):
        ax.plot(rule.nodes.real, rule.nodes.imag, ".", ms=2, label=lab)
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    ax.set_title("integration paths (quadrature nodes)")
    ax.legend(fontsize=8)
    ax.axhline(0, color="0.85", lw=0.6)
    ax.axvline(0, color="0.85", lw=0.6)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
