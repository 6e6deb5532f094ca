"""Matplotlib figures written next to the CSV/JSON outputs (Agg backend, no display)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .params import WaveParams, eval_P, eval_R  # noqa: E402
from .quadrature import level_curve_samples, periodic_orbit_samples  # noqa: E402

_SAVE = {"dpi": 120, "bbox_inches": "tight", "metadata": {"Software": None}}


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def phase_portrait(p: WaveParams, path, fractions=(0.2, 0.45, 0.7, 0.9)) -> Path:
    """Homoclinic loop of the saddle (0, 0) with a few closed orbits of the period annulus."""
    loop = level_curve_samples(p.b, gamma=p.gamma, n=400, coords="xy", c=p.c)
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    x = np.concatenate([loop.first, loop.first[::-1]])
    y = np.concatenate([loop.second, -loop.second[::-1]])
    ax.plot(x, y, color="k", lw=1.4, label="homoclinic loop")
    for frac in fractions:
        xo, yo = periodic_orbit_samples(p, frac, 200)
        ax.plot(xo, yo, color="tab:blue", lw=0.8, alpha=0.8)
    ax.plot([0.0], [0.0], "o", color="tab:red", ms=4, label="saddle")
    ax.plot([p.center], [0.0], "s", color="tab:green", ms=4, label="center")
    ax.axvline(1.0, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"normalized phase plane, b={p.b:g}, gamma={p.gamma:.4g}")
    ax.legend(loc="upper left", fontsize=8, frameon=False)
    return _finish(fig, path)


def gamma_h_curves(b: float, h_values, path) -> Path:
    """Level curves A/B - ubar^2 = h of the transformed system."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for h in h_values:
        cur = level_curve_samples(b, h=h, n=300, coords="zu")
        z = np.concatenate([cur.first, cur.first[::-1]])
        u = np.concatenate([cur.second, -cur.second[::-1]])
        ax.plot(z, u, lw=1.0, label=f"h={h:g}")
    ax.set_xlabel("z")
    ax.set_ylabel("ubar")
    ax.set_ylim(-10, 10)
    ax.set_title(f"transformed level curves, b={b:g}")
    ax.legend(fontsize=8, frameon=False)
    return _finish(fig, path)


def hypothesis_curves(b_values, path, n: int = 400) -> Path:
    """R/z^3 (must stay negative) and P/z^4 (must stay positive) on (0, 1)."""
    z = np.linspace(1e-3, 1.0 - 1e-3, n)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for b in b_values:
        a1.plot(z, eval_R(z, float(b)) / z**3, lw=1.0, label=f"b={float(b):g}")
        a2.plot(z, eval_P(z, float(b)) / z**4, lw=1.0, label=f"b={float(b):g}")
    a1.axhline(0.0, color="k", lw=0.6)
    a2.axhline(0.0, color="k", lw=0.6)
    a1.set_title("R(z) / z^3")
    a2.set_title("P(z) / z^4")
    a2.set_yscale("log")
    for ax in (a1, a2):
        ax.set_xlabel("z")
    a1.legend(fontsize=7, frameon=False)
    return _finish(fig, path)


def q_scan(report, path) -> Path:
    """Q against k, with the I1' sign in a second panel."""
    k = np.array(report.k_grid)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    a1.plot(k, report.q_values, "o-", ms=3)
    a1.set_xlabel("k")
    a1.set_ylabel("Q")
    a1.set_title(f"Q(k), verdict {report.verdict}")
    a2.semilogy(k, [r.I1p for r in report.rows], "o-", ms=3, color="tab:orange")
    a2.set_xlabel("k")
    a2.set_ylabel("I1'(h)")
    return _finish(fig, path)


def profile(prof, path) -> Path:
    """phi and mu against X over the central part of the domain."""
    p = prof.params
    X = prof.x_samples
    width = min(prof.half_length, 12.0 / np.sqrt(p.gamma))
    sel = np.abs(X) <= width
    fig, ax = plt.subplots(figsize=(5.5, 3.6))
    ax.plot(X[sel], prof.phi[sel], label="phi")
    ax.plot(X[sel], prof.mu[sel], label="mu = phi - phi''")
    ax.axhline(p.k, color="0.5", ls=":", lw=0.8)
    ax.set_xlabel("x")
    ax.set_title(f"solitary wave, b={p.b:g}, c={p.c:g}, k={p.k:g}")
    ax.legend(fontsize=8, frameon=False)
    return _finish(fig, path)


def distance(traj, path, title: str = "") -> Path:
    """Orbital distance d(t) and relative Casimir drift."""
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    a1.plot(traj.times, traj.distance)
    a1.set_xlabel("t")
    a1.set_ylabel("H1 orbital distance")
    a1.set_title(title)
    drift = np.abs(traj.casimir - traj.casimir[0]) / abs(traj.casimir[0])
    a2.plot(traj.times, drift, color="tab:purple")
    a2.set_xlabel("t")
    a2.set_ylabel("relative Casimir drift")
    return _finish(fig, path)
