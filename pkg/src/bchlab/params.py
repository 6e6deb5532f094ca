"""Wave parameters and the closed-form scalar kernel.

Everything here is a pure function of its arguments.  The kernel
functions ``A``, ``B`` and ``f`` are

    A(z) = 2 (1-z)^(b-1) (1 + (b-1) z) - 2
    B(z) = A(z) + b (b-1) z^2 (1-z)^(b-1)
    f(z) = 2 - 2 (1-z)^b - (b+1) z - (b-1) z (1-z)^b

All three vanish to second or third order at z = 0, so the closed forms
cancel catastrophically there.  For |z| < SERIES_CUTOFF they are evaluated
from the convergent series obtained by integrating

    A' = -2 b (b-1) z (1-z)^(b-2),  B' = -b (b-1)(b+1) z^2 (1-z)^(b-2),
    f' = (b+1) A / 2

term by term, which keeps full relative precision down to z -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import KernelDomainError, ParameterDomainError, SingularLineError

B_MIN_DEFAULT = 1.0 + 1e-3
SERIES_CUTOFF = 0.25
_SERIES_TERMS = 48


@dataclass(frozen=True)
class WaveParams:
    """Validated (b, c, k) with the derived gamma and h = 1/gamma."""

    b: float
    c: float
    k: float
    gamma: float
    h: float

    @property
    def center(self) -> float:
        """x-coordinate of the center of the normalized system."""
        return 2.0 * self.gamma / (self.b + 1.0)

    @property
    def homoclinic_level(self) -> float:
        return homoclinic_level(self.b, self.gamma)

    @property
    def k_max(self) -> float:
        return self.c / (self.b + 1.0)

    def as_dict(self) -> dict:
        return {"b": self.b, "c": self.c, "k": self.k, "gamma": self.gamma, "h": self.h}


def gamma_of(b: float, c: float, k: float) -> float:
    return (c - k * (b + 1.0)) / (c - k)


def k_of_gamma(b: float, c: float, gamma: float) -> float:
    """Inverse of :func:`gamma_of` at fixed (b, c)."""
    return c * (1.0 - gamma) / (b + 1.0 - gamma)


def make_params(b: float, c: float, k: float, *, b_min: float = B_MIN_DEFAULT) -> WaveParams:
    """Validate (b, c, k) and return the parameter bundle.

    Raises ParameterDomainError naming the violated bound when b <= b_min,
    c <= 0 or k is outside the open interval (0, c/(b+1)).
    """
    b, c, k = float(b), float(c), float(k)
    if not all(math.isfinite(v) for v in (b, c, k)):
        raise ParameterDomainError(f"non-finite parameter in (b={b}, c={c}, k={k})")
    if b <= 1.0:
        raise ParameterDomainError(f"b must satisfy b > 1 (got b={b})")
    if b < b_min:
        raise ParameterDomainError(f"b must satisfy b >= b_min={b_min} (got b={b})")
    if c <= 0.0:
        raise ParameterDomainError(f"c must satisfy c > 0 (got c={c})")
    kmax = c / (b + 1.0)
    if not k > 0.0:
        raise ParameterDomainError(f"k must satisfy k > 0 (got k={k})")
    if not k < kmax:
        raise ParameterDomainError(f"k must satisfy k < c/(b+1) = {kmax!r} (got k={k})")
    gamma = gamma_of(b, c, k)
    if not 0.0 < gamma < 1.0:
        # unreachable for validated inputs; kept as a guard on rounding
        raise ParameterDomainError(f"gamma={gamma} left (0, 1)")
    return WaveParams(b=b, c=c, k=k, gamma=gamma, h=1.0 / gamma)


def params_from_h(b: float, h: float, c: float = 1.0, **kw) -> WaveParams:
    """Parameter bundle for a given level h > 1 at wave speed c."""
    if not h > 1.0:
        raise ParameterDomainError(f"h must satisfy h > 1 (got h={h})")
    return make_params(b, c, k_of_gamma(b, c, 1.0 / h), **kw)


def homoclinic_level(b: float, gamma: float) -> float:
    """Value of the normalized first integral at the saddle (0, 0)."""
    return 2.0 * (1.0 - gamma) / (gamma * b * (b - 1.0))


def tail_constant(b: float) -> float:
    """Leading constant C in z ~ C / ubar^2 along Gamma_h as ubar -> infinity.

    Local analysis gives A/B ~ 3 / ((b+1) z), hence C = 3/(b+1); this is
    1 only for b = 2.
    """
    return 3.0 / (b + 1.0)


# ---------------------------------------------------------------------------
# kernel


def _pow1m(z, p):
    """(1 - z)**p for z <= 1 without losing digits near z = 0."""
    with np.errstate(divide="ignore"):
        return np.exp(p * np.log1p(-z))


def _series_abf(z, b):
    zz = np.asarray(z, dtype=float)
    coef = 1.0
    sa = np.zeros_like(zz)
    sb = np.zeros_like(zz)
    sf = np.zeros_like(zz)
    zn = np.ones_like(zz)
    for n in range(_SERIES_TERMS):
        t = coef * zn
        sa = sa + t / (n + 2)
        sb = sb + t * zz / (n + 3)
        sf = sf + t * zz / ((n + 2) * (n + 3))
        coef *= (n + 2.0 - b) / (n + 1.0)
        if coef == 0.0:
            break
        zn = zn * zz
    z2 = zz * zz
    bb = b * (b - 1.0)
    a = -2.0 * bb * z2 * sa
    bv = -bb * (b + 1.0) * z2 * sb
    f = -bb * (b + 1.0) * z2 * sf
    return a, bv, f


def _closed_abf(z, b):
    zz = np.asarray(z, dtype=float)
    nu = _pow1m(zz, b - 1.0)
    a = 2.0 * nu * (1.0 + (b - 1.0) * zz) - 2.0
    bv = a + b * (b - 1.0) * zz * zz * nu
    f = 2.0 - (b + 1.0) * zz - nu * (1.0 - zz) * (2.0 + (b - 1.0) * zz)
    return a, bv, f


def abf(z, b):
    """(A, B, f) at z < 1, accurate in relative terms everywhere."""
    zz = np.asarray(z, dtype=float)
    if np.any(zz >= 1.0):
        raise SingularLineError("A, B, f require z < 1")
    small = np.abs(zz) < SERIES_CUTOFF
    if small.all():
        out = _series_abf(zz, b)
    elif not small.any():
        out = _closed_abf(zz, b)
    else:
        s = _series_abf(np.where(small, zz, 0.0), b)
        c = _closed_abf(np.where(small, 0.5, zz), b)
        out = tuple(np.where(small, si, ci) for si, ci in zip(s, c))
    if np.ndim(z) == 0:
        return tuple(float(v) for v in out)
    return out


def abf_prime(z, b):
    """(A', B', f') at z < 1."""
    zz = np.asarray(z, dtype=float)
    w = _pow1m(zz, b - 2.0)
    bb = b * (b - 1.0)
    ap = -2.0 * bb * zz * w
    bp = -bb * (b + 1.0) * zz * zz * w
    a, _, _ = abf(zz, b)
    fp = 0.5 * (b + 1.0) * np.asarray(a)
    if np.ndim(z) == 0:
        return float(ap), float(bp), float(fp)
    return ap, bp, fp


@dataclass(frozen=True)
class KernelValues:
    """A, A', A'', B, B', B'', f, f' at one point (or an array of points)."""

    A: float
    Ap: float
    App: float
    B: float
    Bp: float
    Bpp: float
    f: float
    fp: float


def _check_unit_interval(z, closed_right=False):
    zz = np.asarray(z, dtype=float)
    ok = (zz > 0.0) & ((zz <= 1.0) if closed_right else (zz < 1.0))
    if not np.all(ok):
        rng = "(0, 1]" if closed_right else "(0, 1)"
        if not closed_right and np.any(zz == 1.0):
            raise SingularLineError(f"z = 1 is the singular line; z must lie in {rng}")
        raise KernelDomainError(f"z must lie in {rng}")
    return zz


def _check_b(b):
    if not b > 1.0:
        raise ParameterDomainError(f"b must satisfy b > 1 (got b={b})")


def eval_kernel(z, b: float) -> KernelValues:
    """All eight kernel values at z in (0, 1); z may be an array."""
    _check_b(b)
    zz = _check_unit_interval(z)
    a, bv, f = abf(zz, b)
    ap, bp, fp = abf_prime(zz, b)
    bb = b * (b - 1.0)
    w3 = _pow1m(zz, b - 3.0)
    app = 2.0 * bb * w3 * ((b - 1.0) * zz - 1.0)
    bpp = bb * (b + 2.0) * zz * w3 * (b * zz - 2.0)
    vals = (a, ap, app, bv, bp, bpp, f, fp)
    if np.ndim(z) == 0:
        vals = tuple(float(v) for v in vals)
    return KernelValues(*vals)


# ---------------------------------------------------------------------------
# sign-condition functions R, P, l


def eval_R(z, b: float):
    """(H2) combination  z(1-z)B'/2 + (b-1) z B / 2 - (1-z) B  on (0, 1].

    Algebraically this coincides with f(z); it is evaluated from the
    defining combination, with the series kernel near z = 0.
    """
    _check_b(b)
    zz = _check_unit_interval(z, closed_right=True)
    at_one = zz == 1.0
    zi = np.where(at_one, 0.5, zz)
    _, bv, _ = abf(zi, b)
    _, bp, _ = abf_prime(zi, b)
    r = 0.5 * zi * (1.0 - zi) * bp + 0.5 * (b - 1.0) * zi * bv - (1.0 - zi) * bv
    r = np.where(at_one, 1.0 - b, r)
    return float(r) if np.ndim(z) == 0 else r


def eval_P(z, b: float):
    """(H1) combination  2(1-z)A'f + (b-1)Af - (1-z)Af'  on (0, 1]."""
    _check_b(b)
    zz = _check_unit_interval(z, closed_right=True)
    at_one = zz == 1.0
    zi = np.where(at_one, 0.5, zz)
    a, _, f = abf(zi, b)
    ap, _, fp = abf_prime(zi, b)
    p = 2.0 * (1.0 - zi) * ap * f + (b - 1.0) * a * f - (1.0 - zi) * a * fp
    p = np.where(at_one, 2.0 * (b - 1.0) ** 2, p)
    return float(p) if np.ndim(z) == 0 else p


def eval_R_nu(z, b: float):
    """R from its expansion in nu = (1-z)^(b-1); inaccurate as z -> 0."""
    zz = np.asarray(z, dtype=float)
    nu = _pow1m(zz, b - 1.0)
    r = nu * ((b - 1.0) * zz**2 + (3.0 - b) * zz - 2.0) - (b + 1.0) * zz + 2.0
    return float(r) if np.ndim(z) == 0 else r


def eval_P_nu(z, b: float):
    """P from its quadratic expansion in nu; inaccurate as z -> 0."""
    zz = np.asarray(z, dtype=float)
    nu = _pow1m(zz, b - 1.0)
    b1 = b - 1.0
    c2 = 2 * b1**2 * zz**2 - 2 * (b * b - 5 * b + 2) * zz - 6 * b + 2
    c1 = 2 * b * b1**2 * zz**2 - 4 * (3 * b - 1) * zz + 12 * b - 4
    c0 = 2 * b * (b + 1) * zz - 6 * b + 2
    p = c2 * nu * nu + c1 * nu + c0
    return float(p) if np.ndim(z) == 0 else p


def eval_l(z, b: float):
    """l(z) = (b-1)^3 z^2 + (12b - 4)(1 - z)."""
    zz = np.asarray(z, dtype=float)
    v = (b - 1.0) ** 3 * zz**2 + (12.0 * b - 4.0) * (1.0 - zz)
    return float(v) if np.ndim(z) == 0 else v


def R_taylor_coefficient(b: float) -> float:
    """Coefficient of z^3 in R at the origin."""
    return b / 6.0 * (1.0 - b) * (1.0 + b)


def P_taylor_coefficient(b: float) -> float:
    """Coefficient of z^4 in P at the origin."""
    return b * b * (b + 1.0) * (b - 1.0) ** 2 / 6.0


# ---------------------------------------------------------------------------
# first integrals and vector fields


def first_integral_normalized(x, y, p: WaveParams):
    """H-bar(x, y) of the normalized (x, y) system; requires x < 1.

    Uses the identity (1-x)^(b-1)(2(1-g) + 2(1-g)(b-1)x + b(b-1)x^2)
    = B - g A + 2(1-g) so that the value stays accurate near the saddle.
    """
    xx = np.asarray(x, dtype=float)
    if np.any(xx >= 1.0):
        raise SingularLineError("normalized first integral requires x < 1")
    b, g = p.b, p.gamma
    a, bv, _ = abf(xx, b)
    val = (np.asarray(bv) - g * np.asarray(a) + 2.0 * (1.0 - g)) / (g * b * (b - 1.0)) - np.asarray(y) ** 2
    return float(val) if np.ndim(val) == 0 else val


def first_integral_transformed(z, ubar, b: float):
    """H(z, ubar) = A(z)/B(z) - ubar^2 for z in (0, 1)."""
    _check_b(b)
    zz = _check_unit_interval(z)
    a, bv, _ = abf(zz, b)
    val = np.asarray(a) / np.asarray(bv) - np.asarray(ubar) ** 2
    return float(val) if np.ndim(val) == 0 else val


def vector_field_normalized(x, y, p: WaveParams):
    """(dx/dt, dy/dt) of the normalized planar system; requires x < 1."""
    xx = np.asarray(x, dtype=float)
    if np.any(xx >= 1.0):
        raise SingularLineError("normalized vector field requires x < 1")
    b, g = p.b, p.gamma
    dy = xx * _pow1m(xx, b - 2.0) * (1.0 - (b + 1.0) / (2.0 * g) * xx)
    dx = np.asarray(y, dtype=float) + 0.0 * xx
    if np.ndim(dx) == 0:
        return float(dx), float(dy)
    return dx, dy


def vector_field_transformed(z, ubar, b: float):
    """(dz/dtau, dubar/dtau) of the transformed Hamiltonian system."""
    _check_b(b)
    zz = _check_unit_interval(z)
    _, bv, f = abf(zz, b)
    du = 2.0 * b * (b - 1.0) * zz * _pow1m(zz, b - 2.0) * np.asarray(f) / np.asarray(bv) ** 2
    dz = 2.0 * np.asarray(ubar, dtype=float) + 0.0 * zz
    if np.ndim(dz) == 0:
        return float(dz), float(du)
    return dz, du
