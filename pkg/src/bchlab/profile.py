"""Physical solitary-wave profiles phi(X), phi'(X) and momentum density mu(X).

The wave is the homoclinic loop of the normalized system

    dx/dzeta = y,   dy/dzeta = F(x) = x (1-x)^(b-2) (1 - (b+1) x / (2 gamma)),

mapped to the physical coordinate X by

    dX/dzeta = gamma^(-1/2) (1 - x)^((b-1)/2),

and to the wave height by phi = k + (c - k) x.  At the tail dzeta/dX tends to
sqrt(gamma), so phi - k decays like exp(-sqrt(gamma) |X|).

Integration starts at the crest (x_max, 0), a regular point, and runs in X
directly.  Phase 1 integrates the planar system down to x = x_max / 2.  The
approach to the saddle is unstable for the planar system, so phase 2 uses the
first integral to eliminate y and integrates the scalar equation for log x
until x / x_max drops below ``cutoff``.  Past that point the linearized tail
x ~ exp(-sqrt(gamma) X) is used.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InsufficientTailError, IntegrationError
from .params import WaveParams, _pow1m, first_integral_normalized
from .quadrature import homoclinic_y2, turning_point_x

DEFAULT_CUTOFF = 1e-13
_SWITCH_FRACTION = 0.5
_RTOL = 1e-12
_ATOL = 1e-14


@dataclass(frozen=True)
class _Shape:
    """Dense representation of the half profile X >= 0 in normalized units."""

    p: WaveParams
    x_max: float
    phase1: object
    x1_end: float
    phase2: object
    x2_end: float
    log_x_end: float

    def normalized(self, X):
        """Return (x_n, dx_n/dX) for X >= 0."""
        X = np.asarray(X, dtype=float)
        b, g = self.p.b, self.p.gamma
        xn = np.empty_like(X)
        dx = np.empty_like(X)
        m1 = X <= self.x1_end
        m2 = (X > self.x1_end) & (X <= self.x2_end)
        m3 = X > self.x2_end
        if np.any(m1):
            s = self.phase1(X[m1])
            xn[m1] = s[0]
            dx[m1] = s[1] * _rate(s[0], b, g)
        if np.any(m2):
            xs = np.exp(self.phase2(X[m2])[0])
            xn[m2] = xs
            dx[m2] = -np.sqrt(homoclinic_y2(xs, self.p, self.x_max)) * _rate(xs, b, g)
        if np.any(m3):
            xs = np.exp(self.log_x_end - math.sqrt(g) * (X[m3] - self.x2_end))
            xn[m3] = xs
            dx[m3] = -math.sqrt(g) * xs
        return xn, dx


@dataclass(frozen=True)
class WaveProfile:
    """Solitary-wave samples on the periodic grid X_j = -L/2 + j L / n."""

    params: WaveParams
    x_samples: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    mu: np.ndarray
    half_length: float
    decay_exponent_fit: float
    excess: np.ndarray
    energy_drift: float
    _shape: _Shape = field(repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.x_samples.size

    @property
    def length(self) -> float:
        return float(self.n * (self.x_samples[1] - self.x_samples[0]))

    @property
    def crest(self) -> float:
        return float(self.phi[self.n // 2])

    def sample(self, X):
        """(phi, phi', mu, phi - k) at arbitrary physical points X."""
        return _sample(self._shape, np.asarray(X, dtype=float))

    def resample(self, length: float, n: int) -> "WaveProfile":
        """Same wave on a different periodic grid (used for PDE initial data)."""
        return _assemble(self._shape, length, n, self.half_length, self.energy_drift)

    def header(self) -> dict:
        return {**self.params.as_dict(), "L": self.length, "N": self.n, "half_length": self.half_length,
                "decay_exponent_fit": self.decay_exponent_fit, "energy_drift": self.energy_drift}


def _rate(x, b, g):
    """dzeta/dX = sqrt(gamma) (1 - x)^(-(b-1)/2)."""
    return math.sqrt(g) * _pow1m(x, -(b - 1.0) / 2.0)


def _force(x, b, g):
    return x * _pow1m(x, b - 2.0) * (1.0 - (b + 1.0) / (2.0 * g) * x)


def mu_from(phi, phi_prime, p: WaveParams):
    """mu = phi - phi'' from the integrated second-order traveling-wave equation."""
    b, c, k = p.b, p.c, p.k
    phi = np.asarray(phi, dtype=float)
    denom = c - phi
    if np.any(denom <= 0.0):
        raise IntegrationError("profile reaches the singular height phi = c")
    num = c * k - 0.5 * (b + 1.0) * k * k - 0.5 * (b - 1.0) * (np.asarray(phi_prime) ** 2 - phi**2)
    return num / denom


def _sample(shape: _Shape, X):
    p = shape.p
    xn, dxn = shape.normalized(np.abs(X))
    amp = p.c - p.k
    eta = amp * xn
    phi = p.k + eta
    dphi = -np.sign(X) * np.abs(amp * dxn)
    mu = mu_from(phi, dphi, p)
    return phi, dphi, mu, eta


def _integrate_shape(p: WaveParams, tol: float, cutoff: float, max_span: float) -> tuple[_Shape, float]:
    b, g = p.b, p.gamma
    xm = turning_point_x(p)
    x_switch = _SWITCH_FRACTION * xm

    def planar(_, s):
        r = _rate(s[0], b, g)
        return [s[1] * r, _force(s[0], b, g) * r]

    def reached_switch(_, s):
        return s[0] - x_switch

    reached_switch.terminal = True
    reached_switch.direction = -1
    sol1 = solve_ivp(planar, (0.0, max_span), [xm, 0.0], method="DOP853", rtol=tol, atol=_ATOL,
                     dense_output=True, events=reached_switch)
    if sol1.status < 0 or not sol1.t_events[0].size:
        raise IntegrationError(f"crest phase did not reach x = {x_switch:.3g}: {sol1.message}")
    X1 = float(sol1.t_events[0][0])
    level = p.homoclinic_level
    ts = np.linspace(0.0, X1, 200)
    ys = sol1.sol(ts)
    drift = float(np.max(np.abs(first_integral_normalized(ys[0], ys[1], p) - level)))

    log_end = math.log(cutoff * xm)

    def scalar(_, s):
        x = math.exp(s[0])
        y2 = float(homoclinic_y2(x, p, xm))
        return [-math.sqrt(max(y2, 0.0)) * float(_rate(x, b, g)) / x]

    def reached_cutoff(_, s):
        return s[0] - log_end

    reached_cutoff.terminal = True
    reached_cutoff.direction = -1
    sol2 = solve_ivp(scalar, (X1, X1 + max_span), [math.log(x_switch)], method="DOP853", rtol=tol,
                     atol=_ATOL, dense_output=True, events=reached_cutoff)
    if sol2.status < 0 or not sol2.t_events[0].size:
        raise IntegrationError(f"tail phase did not reach the cutoff {cutoff:g} within span {max_span:g}")
    X2 = float(sol2.t_events[0][0])
    shape = _Shape(p, xm, sol1.sol, X1, sol2.sol, X2, log_end)
    return shape, drift


def _assemble(shape: _Shape, length: float, n: int, half_length: float, drift: float) -> WaveProfile:
    X = -0.5 * length + length * np.arange(n) / n
    phi, dphi, mu, eta = _sample(shape, X)
    prof = WaveProfile(shape.p, X, phi, dphi, mu, half_length, float("nan"), eta, drift, shape)
    try:
        rate = decay_fit(prof)
    except InsufficientTailError:
        rate = float("nan")
    return WaveProfile(shape.p, X, phi, dphi, mu, half_length, rate, eta, drift, shape)


def build_profile(p: WaveParams, n: int = 2048, tol: float = _RTOL, *, length: float | None = None,
                  cutoff: float = DEFAULT_CUTOFF, max_span: float = 1e4) -> WaveProfile:
    """Integrate the homoclinic orbit and sample the wave on a periodic grid.

    The grid is X_j = -L/2 + j L / n with L = 2 * half_length unless
    ``length`` is given; half_length is where (phi - k)/(phi(0) - k) first
    falls below ``cutoff``.
    """
    if n < 64:
        raise ValueError(f"n must be at least 64 (got {n})")
    shape, drift = _integrate_shape(p, tol, cutoff, max_span)
    half = shape.x2_end
    return _assemble(shape, 2.0 * half if length is None else float(length), n, half, drift)


def momentum_of(profile: WaveProfile) -> np.ndarray:
    """mu = phi - phi'' evaluated algebraically from the stored phi, phi'."""
    return mu_from(profile.phi, profile.phi_prime, profile.params)


def spectral_derivative(f, length: float, order: int = 1) -> np.ndarray:
    """Derivative of periodic samples by FFT; the Nyquist mode is dropped for odd orders."""
    n = len(f)
    xi = 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)
    fh = np.fft.rfft(f) * (1j * xi) ** order
    if order % 2 and n % 2 == 0:
        fh[-1] = 0.0
    return np.fft.irfft(fh, n)


def ode_residual(profile: WaveProfile) -> float:
    """Max residual of (c-phi)(phi-phi'') + (b-1)/2 (phi'^2 - phi^2) - ck + (b+1)/2 k^2.

    phi'' comes from spectral differentiation of the excess phi - k, so this
    is independent of the algebraic mu.  Edge samples (first and last 5%)
    are excluded.
    """
    p = profile.params
    b, c, k = p.b, p.c, p.k
    d2 = spectral_derivative(profile.phi - k, profile.length, 2)
    phi, dphi = profile.phi, profile.phi_prime
    res = (c - phi) * (phi - d2) + 0.5 * (b - 1.0) * (dphi**2 - phi**2) - c * k + 0.5 * (b + 1.0) * k * k
    edge = max(1, profile.n // 20)
    return float(np.max(np.abs(res[edge:-edge])))


def spectral_mu_error(profile: WaveProfile) -> float:
    """||(phi - phi''_spectral) - mu||_inf / ||mu||_inf."""
    d2 = spectral_derivative(profile.phi - profile.params.k, profile.length, 2)
    return float(np.max(np.abs(profile.phi - d2 - profile.mu)) / np.max(np.abs(profile.mu)))


def decay_fit(profile: WaveProfile, window: tuple[float, float] = (1e-11, 1e-5)) -> float:
    """Least-squares slope of -log(phi - k) against |X| over the tail window.

    The window is relative to the crest excess; it must contain samples
    spanning at least four decades.
    """
    eta = profile.excess
    top = eta.max()
    X = np.abs(profile.x_samples)
    sel = (eta >= window[0] * top) & (eta <= window[1] * top) & (profile.x_samples > 0)
    if np.count_nonzero(sel) < 8:
        raise InsufficientTailError(f"only {np.count_nonzero(sel)} tail samples in the fit window")
    span = math.log10(eta[sel].max() / eta[sel].min())
    if span < 4.0:
        raise InsufficientTailError(f"tail window spans {span:.2f} decades, need 4")
    slope, _ = np.polyfit(X[sel], np.log(eta[sel]), 1)
    return float(-slope)


def check_invariants(profile: WaveProfile, *, cutoff: float = 1e-12) -> list[str]:
    """List of violated WaveProfile invariants (empty when valid)."""
    p = profile.params
    bad = []
    X = profile.x_samples
    n = profile.n
    # X_j and X_{n-j} are mirror images on the periodic grid
    mirror = profile.phi[1:][::-1]
    if np.max(np.abs(profile.phi[1:] - mirror)) > 1e-10:
        bad.append("phi is not even")
    if not (np.all(profile.phi > p.k) and np.all(profile.phi <= profile.crest) and profile.crest < p.c):
        bad.append("k < phi <= phi(0) < c violated")
    if not np.all(profile.mu > 0.0):
        bad.append("mu > 0 violated")
    if X[n // 2] != 0.0 or abs(profile.phi_prime[n // 2]) > 1e-12:
        bad.append("crest not at X = 0 with phi'(0) = 0")
    phi_h, _, _, eta_h = profile.sample(np.array([profile.half_length]))
    if eta_h[0] > cutoff * (profile.crest - p.k):
        bad.append("tail at half_length above cutoff")
    return bad


# ---------------------------------------------------------------------------
# export


def write_csv(profile: WaveProfile, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "phi", "phi_prime", "mu"])
        for row in zip(profile.x_samples, profile.phi, profile.phi_prime, profile.mu):
            w.writerow([repr(float(v)) for v in row])


def initial_condition_dict(profile: WaveProfile) -> dict:
    """pde-sim initial-condition format: header plus numeric arrays."""
    return {
        "header": profile.header(),
        "x": profile.x_samples.tolist(),
        "phi": profile.phi.tolist(),
        "mu": profile.mu.tolist(),
    }


def write_initial_condition(profile: WaveProfile, path) -> None:
    with open(path, "w") as fh:
        json.dump(initial_condition_dict(profile), fh)


def read_initial_condition(path) -> dict:
    """Load an initial-condition file; arrays come back as numpy arrays."""
    with open(path) as fh:
        data = json.load(fh)
    for key in ("x", "phi", "mu"):
        data[key] = np.asarray(data[key], dtype=float)
    hdr = data["header"]
    if data["mu"].size != hdr["N"]:
        raise ValueError("initial condition length does not match header N")
    return data
