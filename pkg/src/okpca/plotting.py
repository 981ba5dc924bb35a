"""Static figures written next to the CSV reports.

Uses the non-interactive Agg backend; every function saves one file and closes
its figure.
"""

from __future__ import annotations

import functools
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from okpca.detector import DetectionReport  # noqa: E402
from okpca.trajectory import Trajectory  # noqa: E402

COLORS = {"normal": "#0072b2", "faulty": "#d55c00", "train": "#009e72", "unknown": "#999999"}

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "lines.markersize": 3,
    "axes.edgecolor": "#222222",
    "savefig.dpi": 120,
}


def styled(fn):
    """Run a plotting function under :data:`STYLE` without touching global rcParams."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with plt.rc_context(STYLE):
            return fn(*args, **kwargs)

    return wrapper


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


@styled
def plot_errors(
    errors: Sequence[float], labels: Sequence[str], path,
    threshold: float | None = None, title: str = "",
) -> Path:
    """Reconstruction error per test trajectory on a log axis, with the threshold."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    errors = np.maximum(np.asarray(errors, dtype=float), 1e-300)
    idx = np.arange(errors.size)
    labels = np.asarray(labels)
    for label in ("normal", "faulty", "unknown"):
        mask = labels == label
        if mask.any():
            ax.scatter(idx[mask], errors[mask], color=COLORS[label], label=label)
    if threshold is not None:
        ax.axhline(threshold, color="k", ls="--", lw=1, label="threshold")
    ax.set_yscale("log")
    ax.set_xlabel("test trajectory")
    ax.set_ylabel("reconstruction error")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)


def plot_reports(reports: Sequence[DetectionReport], labels: Sequence[str], path, title: str = "") -> Path:
    """:func:`plot_errors` for detection reports sharing one threshold."""
    threshold = reports[0].threshold if reports else None
    return plot_errors([r.reconstruction_error for r in reports], labels, path, threshold, title)


@styled
def plot_trajectories(
    groups: dict[str, Sequence[Trajectory]], path, coords: tuple[int, int] = (0, 1), title: str = ""
) -> Path:
    """Phase-plane view of trajectory groups (e.g. train / normal / faulty)."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for label, trajs in groups.items():
        color = COLORS.get(label, COLORS["unknown"])
        for k, tr in enumerate(trajs):
            ax.plot(
                tr.states[:, coords[0]], tr.states[:, coords[1]], color=color, lw=0.6,
                alpha=0.6, label=label if k == 0 else None,
            )
    ax.set_xlabel(f"x{coords[0] + 1}")
    ax.set_ylabel(f"x{coords[1] + 1}")
    ax.set_aspect("equal", adjustable="datalim")
    if title:
        ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)


@styled
def plot_time_series(normal: Trajectory, faulty: Trajectory, path, names: Sequence[str] | None = None) -> Path:
    """One normal (solid) and one faulty (dotted) trajectory, coordinate by coordinate."""
    n = normal.dim
    cols = 3 if n > 3 else n
    rows = int(np.ceil(n / cols))
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.0 * rows), squeeze=False, sharex=True)
    for i in range(rows * cols):
        ax = axes.flat[i]
        if i >= n:
            ax.axis("off")
            continue
        ax.plot(normal.times, normal.states[:, i], color=COLORS["normal"], lw=1)
        ax.plot(faulty.times, faulty.states[:, i], color=COLORS["faulty"], lw=1, ls=":")
        ax.set_title(names[i] if names else f"x{i + 1}")
    return _save(fig, path)


@styled
def plot_rates(rows: Sequence[dict], path, x_key: str = "M", title: str = "") -> Path:
    """False-positive and false-negative rates (percent) against ``x_key``."""
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    xs = [r[x_key] for r in rows]
    ax.plot(xs, [100 * float(r["fp_rate"]) for r in rows], "o-", label="false positive")
    ax.plot(xs, [100 * float(r["fn_rate"]) for r in rows], "s--", label="false negative")
    ax.set_xlabel(x_key)
    ax.set_ylabel("rate (%)")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)
