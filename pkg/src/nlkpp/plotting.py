"""PNG figures for the CLI reports (non-interactive Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_path(path, coeff, means=None):
    fig, ax = plt.subplots(figsize=(7, 3))
    ax.plot(coeff.sample_times, coeff.values, lw=0.6, drawstyle="steps-post" if coeff.interpolation == "constant" else "default")
    if means is not None:
        ax.axhline(means.least, color="C1", ls="--", label=f"least mean {means.least:.4f}")
        ax.axhline(means.upper, color="C2", ls=":", label=f"upper mean {means.upper:.4f}")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("t")
    ax.set_ylabel("a(t)")
    return _save(fig, path)


def plot_speed_curve(path, mus, least, upper, mu_star=None, c_star=None):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(mus, least, label="least mean of c")
    ax.plot(mus, upper, ls="--", label="upper mean of c")
    if mu_star is not None:
        ax.plot([mu_star], [c_star], "ko", ms=4, label=f"mu* = {mu_star:.4f}")
    ax.set_xlabel("mu")
    ax.set_ylabel("speed")
    finite = np.asarray(least)[np.isfinite(least)]
    if finite.size:
        ax.set_ylim(0.9 * finite.min(), min(finite.max(), 4 * finite.min()))
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_snapshots(path, traj, every=None):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    n = len(traj)
    idx = range(0, n, every or max(1, n // 8))
    for i in idx:
        ax1.plot(traj.grid.x, traj.values[i], lw=0.8)
    ax1.set_xlabel("x")
    ax1.set_ylabel("u")
    ax2.plot(traj.times, traj.front_pos)
    ax2.set_xlabel("t")
    ax2.set_ylabel("front position")
    return _save(fig, path)


def plot_wave(path, x, U, phi_plus, phi_minus, distances, schedule):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.semilogy(x, U, label="U")
    ax1.semilogy(x, phi_plus, ls="--", label="phi+")
    ax1.semilogy(x, np.maximum(phi_minus, 1e-300), ls=":", label="phi-")
    ax1.set_ylim(1e-12, 2)
    ax1.set_xlabel("x")
    ax1.legend(fontsize=8)
    ax2.semilogy(schedule[1:], distances, "o-")
    ax2.set_xlabel("n")
    ax2.set_ylabel("sup distance")
    return _save(fig, path)


def plot_stability(path, times, distance, alpha):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogy(times, np.maximum(distance, 1e-16), label="ratio distance")
    ax.semilogy(times, np.maximum(alpha - 1.0, 1e-16), ls="--", label="alpha - 1")
    ax.set_xlabel("t")
    ax.legend(fontsize=8)
    return _save(fig, path)
