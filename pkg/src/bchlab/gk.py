"""Vectorized globally adaptive Gauss-Kronrod (G7/K15) quadrature.

Panels are bisected in batches so that the integrand is always called on a
numpy array of abscissae.  The per-panel error estimate is the plain
|K15 - G7| difference, which is pessimistic for smooth integrands; the
returned estimate is therefore an honest upper bound in practice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureError

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-point rule on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes x_1, x_3, x_5 and the center
for i, w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[i] = w
    GAUSS_WEIGHTS[14 - i] = w
GAUSS_WEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps


@dataclass
class QuadResult:
    value: float
    abs_error: float
    evaluations: int
    panels: int


def _panel_rules(func, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    fx = np.asarray(func(x.ravel()), dtype=float).reshape(x.shape)
    if not np.all(np.isfinite(fx)):
        bad = x[~np.isfinite(fx)][:3]
        raise QuadratureError(f"non-finite integrand near {bad.tolist()}")
    k = half * (fx @ KRONROD_WEIGHTS)
    g = half * (fx @ GAUSS_WEIGHTS)
    resabs = np.abs(half) * (np.abs(fx) @ KRONROD_WEIGHTS)
    return k, np.abs(k - g), resabs


def integrate(func, a: float, b: float, tol: float = 1e-10, *, initial_panels: int = 8,
              max_panels: int = 20000) -> QuadResult:
    """Integrate a vectorized ``func`` over [a, b].

    Converged when the summed error estimate is at most ``tol * |I|``
    (a relative tolerance), floored at a few hundred ulps of the integral
    of |func| (the round-off limit).  Raises QuadratureError otherwise.
    """
    edges = np.linspace(a, b, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    val, err, rabs = _panel_rules(func, lo, hi)
    nev = 15 * lo.size
    while True:
        total = float(val.sum())
        toterr = float(err.sum())
        target = max(tol * abs(total), 500.0 * _EPS * float(rabs.sum()))
        if toterr <= target:
            return QuadResult(total, toterr, nev, lo.size)
        if lo.size >= max_panels:
            raise QuadratureError(
                f"tolerance not met: error estimate {toterr:.3e} > target {target:.3e} "
                f"after {lo.size} panels"
            )
        order = np.argsort(err)[::-1]
        need = toterr - 0.5 * target
        nsplit = int(np.searchsorted(np.cumsum(err[order]), need) + 1)
        nsplit = min(max(nsplit, 1), order.size)
        split = order[:nsplit]
        keep = np.ones(lo.size, dtype=bool)
        keep[split] = False
        m = 0.5 * (lo[split] + hi[split])
        nlo = np.concatenate([lo[split], m])
        nhi = np.concatenate([m, hi[split]])
        nval, nerr, nabs = _panel_rules(func, nlo, nhi)
        nev += 15 * nlo.size
        lo = np.concatenate([lo[keep], nlo])
        hi = np.concatenate([hi[keep], nhi])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        rabs = np.concatenate([rabs[keep], nabs])
