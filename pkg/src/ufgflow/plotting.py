"""Figure rendering for the report path (files only, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 10,
}


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def density_figure(field, path, window: float | None = 5.0, vortices=None, title: str = "") -> Path:
    """|phi| as a line (1D) or image (2D, cropped to [-window, window]^2)."""
    g = field.grid
    amp = np.abs(field.values)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 4.0))
        if g.dim == 1:
            ax.plot(g.axes[0], amp, lw=1.2)
            ax.set_xlabel("x")
            ax.set_ylabel("|phi|")
        elif g.dim == 2:
            xs, ys = g.axes
            sx = slice(None) if window is None else (np.abs(xs) <= window)
            sy = slice(None) if window is None else (np.abs(ys) <= window)
            sub = amp[sx][:, sy]
            ext = [xs[sx][0], xs[sx][-1], ys[sy][0], ys[sy][-1]]
            im = ax.imshow(sub.T, origin="lower", extent=ext, cmap="viridis", aspect="equal")
            fig.colorbar(im, ax=ax, label="|phi|")
            if vortices:
                ax.plot([v.x for v in vortices], [v.y for v in vortices], "r+", ms=8)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.grid(False)
        else:
            k = g.shape[2] // 2
            xs, ys = g.axes[0], g.axes[1]
            im = ax.imshow(amp[:, :, k].T, origin="lower", extent=[xs[0], xs[-1], ys[0], ys[-1]],
                           cmap="viridis", aspect="auto")
            fig.colorbar(im, ax=ax, label="|phi| (z = 0 slice)")
            ax.grid(False)
        if title:
            ax.set_title(title)
        return _save(fig, path)


def history_figure(history, path) -> Path:
    steps = np.array([h.step for h in history])
    e = np.array([h.energy for h in history])
    inc = np.array([h.increment for h in history])
    with plt.rc_context(STYLE):
        fig, (a1, a2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
        ok = np.isfinite(e)
        a1.plot(steps[ok], e[ok], lw=1.0)
        a1.set_xlabel("step")
        a1.set_ylabel("energy")
        a2.semilogy(steps, np.maximum(inc, 1e-300), lw=1.0)
        a2.set_xlabel("step")
        a2.set_ylabel("||phi^{n+1} - phi^n||")
        return _save(fig, path)


def profile_figure(curves: dict, path, xlabel: str = "x", ylabel: str = "phi") -> Path:
    """Overlay of named (x, y) curves."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for i, (name, (x, y)) in enumerate(curves.items()):
            ax.plot(x, y, lw=1.4 if i == 0 else 1.0, ls="-" if i == 0 else "--", label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(frameon=False)
        return _save(fig, path)


def table_figure(alphas, betas, table, path, title: str = "") -> Path:
    """Energy versus alpha, one line per beta."""
    table = np.asarray(table, dtype=float)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for j, b in enumerate(betas):
            ax.plot(alphas, table[:, j], "o-", ms=3, lw=1.0, label=f"beta = {b:g}")
        ax.set_xlabel("alpha")
        ax.set_ylabel("energy")
        ax.set_yscale("log")
        ax.legend(frameon=False, fontsize=8)
        if title:
            ax.set_title(title)
        return _save(fig, path)
