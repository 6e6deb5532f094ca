"""Level-curve quadrature for the stability functional Q.

Two coordinate systems describe the same solitary wave:

* the normalized plane (x, y), where the wave is the homoclinic loop of the
  saddle (0, 0) and reaches its crest at the turning point x_max;
* the transformed plane (z, ubar), where it is the curve
  Gamma_h : A(z)/B(z) - ubar^2 = h, with h = 1/gamma and z = x.

Q is evaluated once in each system (``q_via_x`` and ``q_via_ubar``) with
independent integrands.  ``i1_prime``/``i2_prime`` evaluate the derivative
integrals whose signs decide monotonicity of Q in h.

Conventions: Gamma_h is traversed along the flow, on which ubar decreases
from +inf to -inf, so that for an even integrand
``int_{Gamma_h} F dubar = -2 int_0^inf F dubar``.  Every integral over the
upper branch is computed in z on (0, z_t) after the substitution
z = z_t - s^2, which removes the square-root singularity at the turning
point; near z = 0 all integrands vanish linearly in z, so no tail
truncation is needed.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import gk
from .errors import BracketError, QuadratureError
from .params import (
    WaveParams,
    _pow1m,
    abf,
    abf_prime,
    eval_P,
    eval_R,
    first_integral_normalized,
    homoclinic_level,
    k_of_gamma,
    make_params,
)

DEFAULT_TOL = 1e-10

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@dataclass
class CurveIntegral:
    value: float
    abs_error_estimate: float
    turning_point: float
    route: str
    evaluations: int


def _gap_integral(dist, xt, deriv):
    """int_{xt-dist}^xt deriv(t) dt by 12-point Gauss-Legendre, vectorized in dist."""
    half = 0.5 * np.asarray(dist, dtype=float)
    t = (xt - half)[..., None] + half[..., None] * _GL_X
    return half * (deriv(t) @ _GL_W)


def _near_window(xt: float) -> float:
    """Width of the window below a turning point where gaps are integrated."""
    return min(0.05 * xt, 0.25 * (1.0 - xt))


# ---------------------------------------------------------------------------
# turning points


def _level_x(x, b, g):
    # printed level equation of the homoclinic loop, y = 0
    return _pow1m(x, b - 1.0) * (2 * (1 - g) + 2 * (1 - g) * (b - 1) * x + b * (b - 1) * x * x) - 2 * (1 - g)


def turning_point_x(p: WaveParams) -> float:
    """Rightmost point x_max of the homoclinic loop on y = 0."""
    b, g = p.b, p.gamma
    lo, hi = p.center, 1.0
    flo, fhi = _level_x(lo, b, g), _level_x(hi, b, g)
    if not (flo > 0.0 > fhi):
        raise BracketError(f"no sign change of the level equation on [{lo}, {hi}] for {p}")
    if _level_x(1.0 - 1e-12, b, g) >= 0.0:
        raise BracketError(
            f"crest lies within 1e-12 of the singular line x = 1 for {p}; "
            f"k must exceed crest_guard_k(b, c) to be resolved in double precision"
        )
    x = brentq(_level_x, lo, hi, args=(b, g), xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(_level_x(x, b, g)) > 1e-12:
        raise BracketError(f"turning point residual too large at x={x}")
    return float(x)


def _gap_z(z, b, h):
    a, bv, _ = abf(z, b)
    return np.asarray(a) - h * np.asarray(bv)


def turning_point_z(b: float, h: float, *, probe: int = 400) -> float:
    """Solution z_t in (0, 1) of A(z)/B(z) = h.

    A/B is not proved monotone; a probe grid counts sign changes of A - hB
    and raises BracketError if there is more than one.
    """
    if not b > 1.0 or not h > 1.0:
        raise BracketError(f"need b > 1 and h > 1 (got b={b}, h={h})")
    lo, hi = 1e-10, 1.0 - 1e-10
    grid = np.unique(np.concatenate([np.geomspace(lo, 0.5, probe // 2), np.linspace(0.01, hi, probe // 2)]))
    vals = _gap_z(grid, b, h)
    exact = grid[vals == 0.0]
    nz = vals != 0.0
    grid, vals = grid[nz], vals[nz]
    flips = np.nonzero(np.diff(np.sign(vals)))[0]
    if flips.size != 1 or exact.size > 1:
        raise BracketError(f"A/B - h changes sign {flips.size} times on (0, 1) for b={b}, h={h}")
    if exact.size == 1:
        return float(exact[0])
    i = int(flips[0])
    zt = brentq(_gap_z, grid[i], grid[i + 1], args=(b, h), xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    a, bv, _ = abf(zt, b)
    if abs(a / bv - h) > 1e-12 * h:
        raise BracketError(f"|A/B - h| too large at z_t={zt}")
    return float(zt)


# ---------------------------------------------------------------------------
# curve geometry


def homoclinic_y2(x, p: WaveParams, x_max: float, dist=None):
    """y^2 on the homoclinic loop for 0 < x <= x_max.

    ``dist`` = x_max - x may be passed explicitly to avoid round-off when x
    is within a few ulps of the turning point.
    """
    b, g = p.b, p.gamma
    x = np.asarray(x, dtype=float)
    dist = x_max - x if dist is None else np.asarray(dist, dtype=float)
    a, bv, _ = abf(x, b)
    far = (np.asarray(bv) - g * np.asarray(a)) / (g * b * (b - 1.0))

    def slope(t):
        # minus the x-derivative of the potential part of H-bar
        return -2.0 * t * _pow1m(t, b - 2.0) * (1.0 - (b + 1.0) / (2.0 * g) * t)

    near = dist < _near_window(x_max)
    if np.any(near):
        far = np.where(near, _gap_integral(np.where(near, dist, 0.0), x_max, slope), far)
    return far


def gamma_h_ubar2(z, b: float, h: float, z_t: float, dist=None):
    """ubar^2 = A/B - h on Gamma_h for 0 < z <= z_t (``dist`` = z_t - z)."""
    z = np.asarray(z, dtype=float)
    dist = z_t - z if dist is None else np.asarray(dist, dtype=float)
    a, bv, _ = abf(z, b)
    n = np.asarray(a) - h * np.asarray(bv)

    def dn(t):
        return -b * (b - 1.0) * t * _pow1m(t, b - 2.0) * (2.0 - h * (b + 1.0) * t)

    near = dist < _near_window(z_t)
    if np.any(near):
        n = np.where(near, -_gap_integral(np.where(near, dist, 0.0), z_t, dn), n)
    return n / np.asarray(bv)


# ---------------------------------------------------------------------------
# Q and the derivative integrals


def _upper_branch_integral(weight, z_t, tol):
    """int_0^z_t weight(z, z_t - z) dz after z = z_t - s^2 (weight ~ 1/ubar at z_t)."""

    def fs(s):
        d = s * s
        z = np.maximum(z_t - d, 1e-300)
        return 2.0 * s * weight(z, d)

    return gk.integrate(fs, 0.0, math.sqrt(z_t), tol)


def q_via_x(p: WaveParams, tol: float = DEFAULT_TOL) -> CurveIntegral:
    """Q = gamma^(-1/2) int_R G(x(zeta)) dzeta over the homoclinic loop."""
    b, g = p.b, p.gamma
    xm = turning_point_x(p)

    def weight(x, d):
        om = 1.0 - x
        G = b * x * om ** ((b - 3.0) / 2.0) + om ** ((b - 1.0) / 2.0) - om ** (-(b + 1.0) / 2.0)
        return G / np.sqrt(homoclinic_y2(x, p, xm, d))

    r = _upper_branch_integral(weight, xm, tol)
    scale = 2.0 / math.sqrt(g)
    return CurveIntegral(scale * r.value, scale * r.abs_error, xm, "x-route", r.evaluations)


def _g_integrand(z, b):
    """g(z) = A (-B)^(3/2) / (2 sqrt(b(b-1)) z (1-z)^((3b-3)/2) f)."""
    a, bv, f = abf(z, b)
    return a * (-bv) ** 1.5 / (2.0 * math.sqrt(b * (b - 1.0)) * z * _pow1m(z, 1.5 * (b - 1.0)) * f)


def _dAB(z, b):
    a, bv, _ = abf(z, b)
    ap, bp, _ = abf_prime(z, b)
    return (ap * bv - a * bp) / (bv * bv)


def q_via_ubar(b: float, h: float, tol: float = DEFAULT_TOL) -> CurveIntegral:
    """Q = h^(1/2) int_{Gamma_h} g(z) dubar, upper branch in z, doubled."""
    zt = turning_point_z(b, h)

    def weight(z, d):
        ub = np.sqrt(gamma_h_ubar2(z, b, h, zt, d))
        return _g_integrand(z, b) * (-_dAB(z, b)) / (2.0 * ub)

    r = _upper_branch_integral(weight, zt, tol)
    scale = -2.0 * math.sqrt(h)
    return CurveIntegral(scale * r.value, abs(scale) * r.abs_error, zt, "ubar-route", r.evaluations)


def i2_prime(b: float, h: float, tol: float = DEFAULT_TOL) -> CurveIntegral:
    """I2'(h) from its dz form  int_{Gamma_h} -sqrt(b(b-1)) A / (4 (1-z)^((b+1)/2) sqrt(-B) ubar) dz."""
    zt = turning_point_z(b, h)

    def weight(z, d):
        a, bv, _ = abf(z, b)
        ub = np.sqrt(gamma_h_ubar2(z, b, h, zt, d))
        return a / (_pow1m(z, 0.5 * (b + 1.0)) * np.sqrt(-bv) * ub)

    r = _upper_branch_integral(weight, zt, tol)
    # both branches contribute equally: ubar and dz change sign together
    scale = -0.5 * math.sqrt(b * (b - 1.0))
    return CurveIntegral(scale * r.value, abs(scale) * r.abs_error, zt, "ubar-route", r.evaluations)


def i1_integrand_terms(z, b):
    """The two terms (P-term, R-term) of I1' per unit dubar, before the minus sign."""
    a, bv, f = abf(z, b)
    b3 = (b * (b - 1.0)) ** 1.5
    om = _pow1m(z, 2.5 * (b - 1.0))
    t1 = -a * (-bv) ** 2.5 * eval_P(z, b) / (2.0 * b3 * z**2 * om * f**3)
    t2 = a * a * (-bv) ** 1.5 * eval_R(z, b) / (2.0 * b3 * z**3 * om * f**2)
    return t1, t2


def i1_prime(b: float, h: float, tol: float = DEFAULT_TOL) -> CurveIntegral:
    """I1'(h) = -int_0^inf (P-term + R-term) dubar; equals h^(1/2) dQ/dh."""
    zt = turning_point_z(b, h)

    def weight(z, d):
        t1, t2 = i1_integrand_terms(z, b)
        ub = np.sqrt(gamma_h_ubar2(z, b, h, zt, d))
        return (t1 + t2) * (-_dAB(z, b)) / (2.0 * ub)

    r = _upper_branch_integral(weight, zt, tol)
    return CurveIntegral(-r.value, r.abs_error, zt, "ubar-route", r.evaluations)


def i1_tail(b: float, h: float, ubar_max: float, tol: float = DEFAULT_TOL) -> CurveIntegral:
    """Part of I1'(h) coming from ubar > ubar_max.

    On Gamma_h, ubar = ubar_max where A/B = h + ubar_max^2, so the tail is
    the z-interval (0, z_m) with z_m the turning point of that larger level.
    The integrand is regular there (ubar >= ubar_max).
    """
    zm = turning_point_z(b, h + ubar_max**2)

    def weight(z):
        t1, t2 = i1_integrand_terms(z, b)
        a, bv, _ = abf(z, b)
        ub = np.sqrt(np.asarray(a) / np.asarray(bv) - h)
        return (t1 + t2) * (-_dAB(z, b)) / (2.0 * ub)

    r = gk.integrate(weight, 0.0, zm, tol)
    return CurveIntegral(-r.value, r.abs_error, zm, "ubar-tail", r.evaluations)


def dq_dh_fd(b: float, h: float, tol: float = DEFAULT_TOL, step: float | None = None) -> tuple[float, float]:
    """Centred difference of Q in h with two Richardson levels.

    Returns (value, error estimate).  The default step shrinks with h - 1
    because Q steepens as the wave approaches the peakon limit h -> 1.
    """
    d = step if step is not None else min(0.01 * h, 0.1 * (h - 1.0))

    def central(delta):
        return (q_via_ubar(b, h + delta, tol).value - q_via_ubar(b, h - delta, tol).value) / (2.0 * delta)

    c1, c2, c3 = central(d), central(0.5 * d), central(0.25 * d)
    r1 = (4.0 * c2 - c1) / 3.0
    r2 = (4.0 * c3 - c2) / 3.0
    return (16.0 * r2 - r1) / 15.0, abs(r2 - r1) / 15.0


# ---------------------------------------------------------------------------
# scans


@dataclass
class ScanRow:
    b: float
    c: float
    k: float
    gamma: float
    h: float
    Q: float
    Q_ubar: float
    dQdh_fd: float
    I1p: float
    I2p: float
    i1_margin: float
    slope_margin: float
    q_increment: float = float("nan")


@dataclass
class MonotonicityReport:
    rows: list[ScanRow]
    tol: float
    verdict: str = "FAIL"
    notes: list[str] = field(default_factory=list)

    @property
    def k_grid(self):
        return [r.k for r in self.rows]

    @property
    def h_grid(self):
        return [r.h for r in self.rows]

    @property
    def q_values(self):
        return [r.Q for r in self.rows]

    def to_rows(self) -> list[dict]:
        return [asdict(r) for r in self.rows]

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "tol": self.tol, "notes": self.notes, "rows": self.to_rows()}


def scan_point(b: float, c: float, k: float, tol: float = DEFAULT_TOL) -> ScanRow:
    p = make_params(b, c, k)
    qx = q_via_x(p, tol)
    qu = q_via_ubar(b, p.h, tol)
    fd, fd_err = dq_dh_fd(b, p.h, tol)
    i1 = i1_prime(b, p.h, tol)
    i2 = i2_prime(b, p.h, tol)
    return ScanRow(
        b=b, c=c, k=k, gamma=p.gamma, h=p.h, Q=qx.value, Q_ubar=qu.value, dQdh_fd=fd,
        I1p=i1.value, I2p=i2.value, i1_margin=i1.value - i1.abs_error_estimate,
        slope_margin=fd - fd_err,
    )


def _scan_point_args(args):
    return scan_point(*args)


def crest_guard_k(b: float, c: float, delta: float = 1e-6) -> float:
    """Smallest k whose turning point satisfies x_max <= 1 - delta.

    As k -> 0 the crest approaches the singular line x = 1; for b close to 1
    it gets within rounding distance of 1 long before k is small (at
    b = 1.01, k = 0.01 gives 1 - x_max ~ 1e-18).  The level equation is
    linear in s = 1 - gamma, so the threshold is explicit.
    """
    x = 1.0 - delta
    w = delta ** (b - 1.0)
    s = w * b * (b - 1.0) * x * x / (2.0 - 2.0 * w * (1.0 + (b - 1.0) * x))
    return k_of_gamma(b, c, 1.0 - s)


def default_k_grid(b: float, c: float, n: int = 20, lo_frac: float = 0.02, hi_frac: float = 0.95,
                   delta: float = 1e-6) -> np.ndarray:
    """Uniform k-grid on [lo_frac, hi_frac] * c/(b+1), raised above ``crest_guard_k``."""
    kmax = c / (b + 1.0)
    lo = max(lo_frac * kmax, crest_guard_k(b, c, delta) * (1.0 + 1e-9))
    return np.linspace(lo, hi_frac * kmax, n)


def monotonicity_scan(b: float, c: float, k_grid, tol: float = DEFAULT_TOL, workers: int = 1) -> MonotonicityReport:
    """Q(k) on a k-grid, with I1' and a finite-difference slope at every node.

    PASS iff Q is strictly increasing along the (sorted) grid and every node
    has a positive I1' and a positive finite-difference slope.
    """
    ks = sorted(float(k) for k in k_grid)
    if len(ks) < 3:
        raise ValueError("monotonicity_scan needs at least 3 grid points")
    for k in ks:
        make_params(b, c, k)
    jobs = [(b, c, k, tol) for k in ks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_scan_point_args, jobs))
    else:
        rows = [_scan_point_args(j) for j in jobs]
    for r0, r1 in zip(rows, rows[1:]):
        r0.q_increment = r1.Q - r0.Q
    rep = MonotonicityReport(rows=rows, tol=tol)
    ok = True
    for r in rows:
        if not r.i1_margin > 0.0:
            ok = False
            rep.notes.append(f"I1' not positive at k={r.k}")
        if not r.slope_margin > 0.0:
            ok = False
            rep.notes.append(f"finite-difference slope not positive at k={r.k}")
    for r in rows[:-1]:
        if not r.q_increment > 0.0:
            ok = False
            rep.notes.append(f"Q not increasing after k={r.k}")
    rep.verdict = "PASS" if ok else "FAIL"
    return rep


@dataclass
class GridReport:
    b_grid: list[float]
    z_grid: list[float]
    nodes: int
    violations: list[tuple[float, float, str]]
    max_R_over_z3: float
    min_P_over_z4: float
    rows: list[dict]

    @property
    def verdict(self) -> str:
        return "PASS" if not self.violations else "FAIL"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "nodes": self.nodes,
            "violations": [list(v) for v in self.violations[:100]],
            "n_violations": len(self.violations),
            "max_R_over_z3": self.max_R_over_z3,
            "min_P_over_z4": self.min_P_over_z4,
            "rows": self.rows,
        }


def hypothesis_grid_check(b_grid, z_grid) -> GridReport:
    """Sign check of R < 0 and P > 0 on a (b, z) grid through R/z^3 and P/z^4."""
    z = np.asarray(sorted(float(v) for v in z_grid))
    if np.any(z <= 0.0) or np.any(z >= 1.0):
        raise ValueError("z_grid must lie in (0, 1)")
    viol = []
    rows = []
    rmax, pmin = -math.inf, math.inf
    for b in b_grid:
        b = float(b)
        if not b > 1.0:
            raise ValueError("b_grid must lie in (1, inf)")
        rn = eval_R(z, b) / z**3
        pn = eval_P(z, b) / z**4
        for zi in z[rn >= 0.0]:
            viol.append((b, float(zi), "R"))
        for zi in z[pn <= 0.0]:
            viol.append((b, float(zi), "P"))
        rows.append({"b": b, "max_R_over_z3": float(rn.max()), "min_P_over_z4": float(pn.min())})
        rmax = max(rmax, float(rn.max()))
        pmin = min(pmin, float(pn.min()))
    return GridReport(
        b_grid=[float(b) for b in b_grid], z_grid=z.tolist(), nodes=len(rows) * z.size,
        violations=viol, max_R_over_z3=rmax, min_P_over_z4=pmin, rows=rows,
    )


def taylor_fit(fn, b: float, order: int, z_max: float = 0.02, n: int = 40, deg: int = 6) -> float:
    """Leading Taylor coefficient of fn at z = 0 by a least-squares fit of fn(z)/z^order."""
    z = np.linspace(z_max / n, z_max, n)
    y = fn(z, b) / z**order
    coef = np.polynomial.polynomial.polyfit(z, y, deg)
    return float(coef[0])


# ---------------------------------------------------------------------------
# sampled curves for plotting


@dataclass
class LevelCurve:
    coords: str
    first: np.ndarray
    second: np.ndarray
    level: float
    residual: float

    def to_rows(self):
        return [{self.coords[0]: float(a), self.coords[1]: float(b)} for a, b in zip(self.first, self.second)]


def level_curve_samples(b: float, gamma: float | None = None, h: float | None = None, n: int = 200,
                        coords: str = "xy", c: float = 1.0) -> LevelCurve:
    """Upper branch of the homoclinic loop ('xy') or of Gamma_h ('zu').

    Samples run from the saddle-side end to the turning point.  For 'zu'
    the saddle side is at z -> 0 (ubar -> inf); the first sample sits at
    z = z_t * 1e-3.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if (gamma is None) == (h is None):
        raise ValueError("give exactly one of gamma, h")
    g = gamma if gamma is not None else 1.0 / h
    hh = 1.0 / g
    s = np.linspace(0.0, 1.0, n)
    if coords == "xy":
        p = make_params(b, c, k_of_gamma(b, c, g))
        xm = turning_point_x(p)
        x = xm * (1.0 - (1.0 - s) ** 2)
        y2 = homoclinic_y2(np.maximum(x, 1e-300), p, xm)
        y = np.sqrt(np.maximum(y2, 0.0))
        lev = homoclinic_level(b, g)
        inner = (x > 0) & (x < xm)
        res = float(np.max(np.abs(first_integral_normalized(x[inner], y[inner], p) - lev))) if inner.any() else 0.0
        return LevelCurve("xy", x, y, lev, res)
    if coords == "zu":
        zt = turning_point_z(b, hh)
        z0 = 1e-3 * zt
        z = z0 + (zt - z0) * (1.0 - (1.0 - s) ** 2)
        u2 = gamma_h_ubar2(z, b, hh, zt)
        u = np.sqrt(np.maximum(u2, 0.0))
        a, bv, _ = abf(z[:-1], b)
        res = float(np.max(np.abs(a / bv - u[:-1] ** 2 - hh)) / hh)
        return LevelCurve("zu", z, u, hh, res)
    raise ValueError(f"coords must be 'xy' or 'zu' (got {coords!r})")


def periodic_orbit_samples(p: WaveParams, fraction: float, n: int = 200) -> tuple[np.ndarray, np.ndarray]:
    """Closed orbit inside the period annulus, at the level
    center_level + fraction * (homoclinic_level - center_level), 0 < fraction < 1."""
    b = p.b
    xc = p.center
    hc = first_integral_normalized(xc, 0.0, p)
    hs = p.homoclinic_level
    lev = hc + fraction * (hs - hc)

    def pot(x):
        return first_integral_normalized(x, 0.0, p) - lev

    xm = turning_point_x(p)
    xl = brentq(pot, 1e-14, xc, xtol=1e-15)
    xr = brentq(pot, xc, xm, xtol=1e-15)
    t = np.linspace(0.0, np.pi, n)
    x = 0.5 * (xl + xr) - 0.5 * (xr - xl) * np.cos(t)
    y = np.sqrt(np.maximum(np.asarray(pot(x)), 0.0))
    x = np.concatenate([x, x[::-1]])
    y = np.concatenate([y, -y[::-1]])
    return x, y
