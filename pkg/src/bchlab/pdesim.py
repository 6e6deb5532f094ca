"""Periodic pseudo-spectral solver for the momentum form of the b-family.

    m_t + u m_x + b m u_x = 0,    u = k + (1 - d_xx)^(-1) (m - k)

is integrated with classical RK4 on a periodic box, products dealiased by the
2/3 rule.  Along the flow, (m^(1/b))_t + (u m^(1/b))_x = 0, so the Casimir
int m^(1/b) dx is conserved and serves as a discretization monitor.

The orbital distance inf_{x0} ||m - mu(. - x0)||_{H^1} is evaluated
spectrally: the H^1 inner product against every translate is a trigonometric
polynomial in x0, maximized coarsely by FFT cross-correlation and then
refined by a root solve on its derivative.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft
from scipy.optimize import brentq, minimize_scalar

from .errors import BlowUpError, PositivityViolation, ResolutionError, SimulationError
from .params import WaveParams
from .profile import WaveProfile, build_profile

DEFAULT_CFL = 0.5
RESOLUTION_THRESHOLD = 1e-10
BLOWUP_FACTOR = 10.0
STABILITY_FACTOR = 10.0
STEADY_FLOOR = 1e-6
SCOPE_NOTE = (
    "finite-horizon evidence: one perturbation family, one final time and one grid; "
    "orbital stability concerns all times and all nearby data and is not proved by this run"
)


@dataclass(frozen=True)
class SimGrid:
    """Periodic grid x_j = -L/2 + j L / N."""

    L: float
    N: int

    def __post_init__(self):
        if self.N < 256 or self.N & (self.N - 1):
            raise ValueError(f"N must be a power of two >= 256 (got {self.N})")
        if not self.L > 0.0:
            raise ValueError(f"L must be positive (got {self.L})")

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        """Angular wavenumbers of the rfft modes."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.N, d=self.dx)

    @property
    def dealias_mask(self) -> np.ndarray:
        return np.arange(self.N // 2 + 1) < self.N / 3.0

    @property
    def tail_band(self) -> slice:
        """Top third of the retained (dealiased) modes, used for the resolution check."""
        hi = int(math.ceil(self.N / 3.0))
        return slice(int(2 * hi // 3), hi)


@dataclass
class SimState:
    t: float
    m: np.ndarray
    k_background: float


class _Workspace:
    """Per-run precomputed spectral factors (never shared between runs)."""

    def __init__(self, grid: SimGrid, b: float):
        self.grid = grid
        self.b = b
        self.xi = grid.xi
        self.ik = 1j * self.xi
        self.ik[-1] = 0.0  # odd derivative of the Nyquist mode
        self.helm = 1.0 / (1.0 + self.xi**2)
        self.mask = grid.dealias_mask
        self.band = grid.tail_band
        self.n = grid.N

    def tail_ratio(self, mh) -> float:
        body = np.max(np.abs(mh[1:]))
        if body == 0.0:
            return 0.0
        return float(np.max(np.abs(mh[self.band])) / body)

    def rhs(self, m):
        n = self.n
        mh = fft.rfft(m) * self.mask
        uh = mh * self.helm
        u = fft.irfft(uh, n)
        ux = fft.irfft(self.ik * uh, n)
        mx = fft.irfft(self.ik * mh, n)
        mf = fft.irfft(mh, n)
        prod = u * mx + self.b * mf * ux
        return -fft.irfft(fft.rfft(prod) * self.mask, n)


def helmholtz_inverse(m, k: float, grid: SimGrid | None = None, length: float | None = None) -> np.ndarray:
    """u = k + (1 - d_xx)^(-1)(m - k) on a periodic grid."""
    m = np.asarray(m, dtype=float)
    L = grid.L if grid is not None else length
    xi = 2.0 * np.pi * np.fft.rfftfreq(m.size, d=L / m.size)
    return k + fft.irfft(fft.rfft(m - k) / (1.0 + xi**2), m.size)


def rhs(state: SimState, grid: SimGrid, b: float, *, check_resolution: bool = True) -> np.ndarray:
    """dm/dt = -(u m_x + b m u_x) with dealiased products."""
    ws = _Workspace(grid, b)
    if check_resolution:
        _check_resolution(ws, state.m)
    return ws.rhs(state.m)


def _check_resolution(ws: _Workspace, m, threshold: float = RESOLUTION_THRESHOLD):
    r = ws.tail_ratio(fft.rfft(m))
    if r > threshold:
        raise ResolutionError(f"spectral tail ratio {r:.2e} exceeds {threshold:g}")
    return r


def _rk4(ws: _Workspace, m, dt):
    k1 = ws.rhs(m)
    k2 = ws.rhs(m + 0.5 * dt * k1)
    k3 = ws.rhs(m + 0.5 * dt * k2)
    k4 = ws.rhs(m + dt * k3)
    return m + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state: SimState, dt: float, grid: SimGrid, b: float) -> SimState:
    """One RK4 step; the input state is not modified."""
    return SimState(state.t + dt, _rk4(_Workspace(grid, b), state.m, dt), state.k_background)


def cfl_dt(m, k: float, grid: SimGrid, cfl: float = DEFAULT_CFL) -> float:
    u = helmholtz_inverse(m, k, grid)
    return cfl * grid.dx / float(np.max(np.abs(u)))


def casimir(m, grid: SimGrid, b: float) -> float:
    return float(np.sum(m ** (1.0 / b)) * grid.dx)


def h1_norm(w, grid: SimGrid) -> float:
    wh = fft.rfft(w)
    wt = np.full(wh.size, 2.0)
    wt[0] = 1.0
    wt[-1] = 1.0
    return math.sqrt(grid.L / grid.N**2 * float(np.sum(wt * (1.0 + grid.xi**2) * np.abs(wh) ** 2)))


# ---------------------------------------------------------------------------
# orbital distance


def orbital_distance(m, mu_ref, grid: SimGrid, *, xtol: float = 1e-10) -> tuple[float, float]:
    """(min_{x0} ||m - mu_ref(. - x0)||_{H^1}, argmin x0) with x0 in [-L/2, L/2)."""
    n, L = grid.N, grid.L
    mh = fft.rfft(np.asarray(m, dtype=float))
    rh = fft.rfft(np.asarray(mu_ref, dtype=float))
    xi = grid.xi
    wt = np.full(xi.size, 2.0)
    wt[0] = 1.0
    wt[-1] = 0.0  # the Nyquist mode has no well-defined translate
    cross = wt * (1.0 + xi**2) * mh * np.conj(rh)

    # <m, mu(. - x0)> is proportional to Re sum cross_j exp(i xi_j x0)
    full = np.zeros(n, dtype=complex)
    full[: xi.size] = cross
    corr = np.real(fft.ifft(full)) * n
    j = int(np.argmax(corr))
    x_coarse = j * grid.dx

    def dcorr(x0):
        return float(np.real(np.sum(1j * xi * cross * np.exp(1j * xi * x0))))

    lo, hi = x_coarse - grid.dx, x_coarse + grid.dx
    if dcorr(lo) > 0.0 > dcorr(hi):
        x0 = brentq(dcorr, lo, hi, xtol=xtol, rtol=1e-15)
    else:
        res = minimize_scalar(lambda s: -float(np.real(np.sum(cross * np.exp(1j * xi * s)))),
                              bounds=(lo, hi), method="bounded", options={"xatol": xtol})
        x0 = float(res.x)
    x0 = (x0 + 0.5 * L) % L - 0.5 * L

    diff = mh - rh * np.exp(-1j * xi * x0)
    d2 = L / n**2 * float(np.sum(wt * (1.0 + xi**2) * np.abs(diff) ** 2))
    return math.sqrt(max(d2, 0.0)), float(x0)


# ---------------------------------------------------------------------------
# runs


@dataclass
class Trajectory:
    times: np.ndarray
    distance: np.ndarray
    shift: np.ndarray
    casimir: np.ndarray
    mass: np.ndarray
    max_m: np.ndarray
    final: SimState
    dt: float
    steps: int
    tail_ratio: float

    @property
    def casimir_drift(self) -> float:
        return float(np.max(np.abs(self.casimir - self.casimir[0])) / abs(self.casimir[0]))

    def rows(self):
        return zip(self.times, self.distance, self.shift, self.casimir, self.mass, self.max_m)


def run(state: SimState, grid: SimGrid, b: float, T: float, *, cfl: float = DEFAULT_CFL,
        dt: float | None = None, n_records: int = 100, mu_ref=None,
        blowup_factor: float = BLOWUP_FACTOR) -> Trajectory:
    """Evolve to time T with a fixed step and record monitors at n_records + 1 times.

    The step is the CFL step of the initial state, shortened so that every
    record interval holds a whole number of steps.  Raises
    PositivityViolation, BlowUpError or ResolutionError on abort.
    """
    ws = _Workspace(grid, b)
    k = state.k_background
    m = np.array(state.m, dtype=float)
    if np.any(m <= 0.0):
        raise PositivityViolation("initial momentum density is not positive")
    tail = _check_resolution(ws, m)
    dt_max = dt if dt is not None else cfl_dt(m, k, grid, cfl)
    interval = T / n_records
    per = max(1, int(math.ceil(interval / dt_max - 1e-12)))
    h = interval / per
    m_cap = blowup_factor * float(np.max(np.abs(m)))

    times = np.linspace(state.t, state.t + T, n_records + 1)
    dist = np.full(n_records + 1, np.nan)
    shift = np.full(n_records + 1, np.nan)
    cas = np.empty(n_records + 1)
    mass = np.empty(n_records + 1)
    mmax = np.empty(n_records + 1)

    def record(i, mm):
        cas[i] = casimir(mm, grid, b)
        mass[i] = float(np.sum(mm - k) * grid.dx)
        mmax[i] = float(np.max(mm))
        if mu_ref is not None:
            dist[i], shift[i] = orbital_distance(mm, mu_ref, grid)

    record(0, m)
    for i in range(1, n_records + 1):
        for _ in range(per):
            m = _rk4(ws, m, h)
            mn = float(np.min(m))
            if not mn > 0.0:
                t_fail = times[i - 1]
                raise PositivityViolation(f"m lost positivity (min {mn:.3e}) after t={t_fail:.4g}")
        if not np.all(np.isfinite(m)) or float(np.max(np.abs(m))) > m_cap:
            raise BlowUpError(f"||m||_inf exceeded {m_cap:.3g} by t={times[i]:.4g}")
        tail = max(tail, _check_resolution(ws, m))
        record(i, m)
    final = SimState(state.t + T, m, k)
    return Trajectory(times, dist, shift, cas, mass, mmax, final, h, per * n_records, tail)


# ---------------------------------------------------------------------------
# experiments


def gaussian_bump(x, center: float = 1.0, width: float = 1.0) -> np.ndarray:
    return np.exp(-(((x - center) / width) ** 2))


@dataclass
class StabilityReport:
    params: WaveParams
    eps: float
    T: float
    grid: SimGrid
    verdict: str
    d0: float
    max_d: float
    factor: float
    casimir_drift: float
    trajectory: Trajectory | None = field(repr=False, default=None)
    reason: str = ""
    scope: str = SCOPE_NOTE

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def summary(self) -> dict:
        t = self.trajectory
        return {
            "params": self.params.as_dict(),
            "eps": self.eps,
            "T": self.T,
            "grid": {"L": self.grid.L, "N": self.grid.N},
            "dt": None if t is None else t.dt,
            "steps": None if t is None else t.steps,
            "verdict": self.verdict,
            "reason": self.reason,
            "d0": self.d0,
            "max_d": self.max_d,
            "stability_factor": self.factor,
            "casimir_drift": self.casimir_drift,
            "max_tail_ratio": None if t is None else t.tail_ratio,
            "scope": self.scope,
        }


def profile_grid(profile: WaveProfile, N: int, L: float | None = None) -> tuple[SimGrid, WaveProfile]:
    """Periodic grid of at least twice the profile half length and the profile sampled on it."""
    length = 2.0 * profile.half_length if L is None else float(L)
    if length < 2.0 * profile.half_length * (1.0 - 1e-12):
        raise ValueError(f"domain L={length:g} is shorter than 2 * half_length = {2 * profile.half_length:g}")
    return SimGrid(length, N), profile.resample(length, N)


def translation_run(p: WaveParams, T: float, *, N: int = 4096, L: float | None = None,
                    n_records: int = 50, cfl: float = DEFAULT_CFL) -> tuple[Trajectory, float, float]:
    """Evolve the exact wave and return (trajectory, final relative H^1 distance, shift error).

    Distances are relative to ||mu - k||_{H^1}; the shift error compares
    the fitted translation with c T modulo L.
    """
    grid, prof = profile_grid(build_profile(p, 256), N, L)
    traj = run(SimState(0.0, prof.mu.copy(), p.k), grid, p.b, T, cfl=cfl, n_records=n_records, mu_ref=prof.mu)
    scale = h1_norm(prof.mu - p.k, grid)
    expected = (p.c * T + 0.5 * grid.L) % grid.L - 0.5 * grid.L
    err = abs((traj.shift[-1] - expected + 0.5 * grid.L) % grid.L - 0.5 * grid.L)
    return traj, float(traj.distance[-1] / scale), float(err)


def stability_experiment(p: WaveParams, eps: float, T: float, *, N: int = 2048, L: float | None = None,
                         factor: float = STABILITY_FACTOR, bump_center: float = 1.0, bump_width: float = 1.0,
                         n_records: int = 100, cfl: float = DEFAULT_CFL) -> StabilityReport:
    """Evolve mu (1 + eps * bump) and track the orbital distance to the unperturbed wave.

    Verdict PASS when max_t d(t) <= factor * max(d(0), floor) with a floor of
    1e-6 (so that eps = 0 measures steadiness of the discrete orbit), FAIL
    otherwise, ABORTED(reason) if the run left the admissible class.
    """
    grid, prof = profile_grid(build_profile(p, 256), N, L)
    m0 = prof.mu * (1.0 + eps * gaussian_bump(grid.x, bump_center, bump_width))
    try:
        traj = run(SimState(0.0, m0, p.k), grid, p.b, T, cfl=cfl, n_records=n_records, mu_ref=prof.mu)
    except SimulationError as exc:
        return StabilityReport(p, eps, T, grid, f"ABORTED({exc.reason})", float("nan"), float("nan"),
                               factor, float("nan"), None, str(exc))
    d0 = float(traj.distance[0])
    max_d = float(np.max(traj.distance))
    ok = max_d <= factor * max(d0, STEADY_FLOOR / factor)
    return StabilityReport(p, eps, T, grid, "PASS" if ok else "FAIL", d0, max_d, factor,
                           traj.casimir_drift, traj)


def write_timeseries(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "d", "shift", "casimir", "mass", "max_m"])
        for row in traj.rows():
            w.writerow([repr(float(v)) for v in row])
