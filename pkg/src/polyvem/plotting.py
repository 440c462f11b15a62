"""Matplotlib rendering of convergence histories and meshes to SVG files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.collections import PolyCollection


def _slope_triangle(ax, ndof, values, rate, label_side="below"):
    """Reference-slope triangle anchored near the last data points."""
    if len(ndof) < 2 or values[-1] <= 0:
        return
    x1 = ndof[-2]
    x0 = x1 / 2.0
    y1 = values[-1] * (0.55 if label_side == "below" else 1.8)
    y0 = y1 * (x1 / x0) ** rate
    ax.plot([x0, x1, x1, x0], [y0, y1, y0, y0], "k-", lw=0.8)
    ax.annotate(
        f"{rate:g}", xy=(np.sqrt(x0 * x1), y0),
        textcoords="offset points", xytext=(0, -12), fontsize=8, ha="center",
    )


def plot_convergence(history, m, rate, path):
    """Log-log plot of the error and estimator for one Sobolev index m."""
    ndof = history.column("ndof")
    err = history.column(f"H{m}e")
    est = history.column(f"H{m}mu")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    ax.loglog(ndof, err, "o-", label=f"H{m}e")
    ax.loglog(ndof, est, "s--", label=f"H{m}mu")
    if rate:
        _slope_triangle(ax, ndof, err, rate)
    ax.set_xlabel("ndof")
    ax.set_ylabel("error / estimator")
    ax.set_title(f"{history.benchmark} ({history.mode}), m = {m}")
    ax.grid(True, which="both", ls=":", lw=0.4)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_components(history, path):
    """Estimator components (volume, stabilization, both jump parts) vs ndof."""
    ndof = history.column("ndof")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    series = [
        ("eta", "volume residual"),
        ("zeta", "stabilization"),
        ("xi_fn", "function jump"),
        ("xi_nd", "normal-derivative jump"),
        ("osc", "oscillation"),
    ]
    for col, label in series:
        vals = history.column(col)
        if np.any(vals > 0):
            ax.loglog(ndof, np.maximum(vals, 1e-300), "o-", ms=3, label=label)
    ax.set_xlabel("ndof")
    ax.set_ylabel("component total")
    ax.set_title(f"{history.benchmark} ({history.mode}): estimator components")
    ax.grid(True, which="both", ls=":", lw=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_mesh(mesh, path, title=None):
    """Render the polygonal mesh."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    polys = [mesh.vertices[cycle] for cycle in mesh.cycles]
    ax.add_collection(
        PolyCollection(polys, facecolor="none", edgecolor="k", lw=0.4)
    )
    ax.autoscale()
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
