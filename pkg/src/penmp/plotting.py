"""PNG figures for sweeps and solution profiles (Agg backend, no GUI)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import NullFormatter, NullLocator  # noqa: E402

from .grid import Grid  # noqa: E402

# no timestamps or version strings, so reruns write identical bytes
_PNG_METADATA = {"Software": None}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    fig.savefig(tmp, format="png", dpi=110, metadata=_PNG_METADATA)
    plt.close(fig)
    tmp.replace(path)
    return path


def plot_sweep(rows, path) -> Path:
    """Boundary decay and levels against eps on log axes."""
    rows = [r for r in rows if r.converged]
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
    if rows:
        eps = np.array([r.eps for r in rows])
        a = rows[0].threshold_a
        ax0.loglog(eps, [r.boundary_max for r in rows], "o-", label="max near boundary")
        ax0.loglog(eps, [r.exterior_sup for r in rows], "s--", label="sup outside")
        ax0.axhline(a, color="k", lw=0.8, label=f"a = {a:.4g}")
        ax0.axhline(a / 10, color="k", lw=0.8, ls=":", label="a/10")
        ax1.semilogx(eps, [r.c_eps for r in rows], "o-", label="c_eps")
        ax1.axhline(rows[0].c_infty, color="k", lw=0.8, label="c_infty")
        for ax in (ax0, ax1):
            ax.set_xticks(eps, [f"{e:g}" for e in eps])
    for ax in (ax0, ax1):
        ax.xaxis.set_minor_formatter(NullFormatter())
        ax.xaxis.set_minor_locator(NullLocator())
    ax0.set_xlabel("eps")
    ax0.set_ylabel("u")
    ax0.legend(fontsize=8)
    ax1.set_xlabel("eps")
    ax1.set_ylabel("level")
    ax1.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_profile(grid: Grid, u: np.ndarray, path, title: str = "",
                 threshold: float | None = None, omega=None) -> Path:
    """Line plot in 1D, filled contours in 2D; ``omega`` marks the penalization region."""
    fig, ax = plt.subplots(figsize=(5, 3.6) if grid.dim == 1 else (4.6, 4))
    y = grid.axis
    if grid.dim == 1:
        ax.plot(y, u, lw=1.2)
        support = y[np.abs(u) > 1e-4 * max(np.max(np.abs(u)), 1e-300)]
        if support.size:
            pad = 0.25 * (support[-1] - support[0]) + grid.spacing
            ax.set_xlim(max(y[0], support[0] - pad), min(y[-1], support[-1] + pad))
        if threshold is not None:
            ax.axhline(threshold, color="k", lw=0.8, ls=":", label="a")
        if omega is not None:
            lo, hi = omega.bounds()
            ax.axvspan(float(lo[0]), float(hi[0]), color="0.9", zorder=0)
        ax.set_xlabel("y")
        ax.set_ylabel("u")
    else:
        cs = ax.contourf(y, y, u.T, levels=24)
        fig.colorbar(cs, ax=ax)
        if omega is not None and hasattr(omega, "radius"):
            ax.add_patch(plt.Circle(tuple(omega.center), omega.radius, fill=False, color="w"))
        ax.set_aspect("equal")
        ax.set_xlabel("y1")
        ax.set_ylabel("y2")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)
