import math

import numpy as np
import pytest

from bchlab.errors import BlowUpError, PositivityViolation, ResolutionError, SimulationError
from bchlab.params import make_params
from bchlab.pdesim import (
    SCOPE_NOTE,
    SimGrid,
    SimState,
    casimir,
    cfl_dt,
    gaussian_bump,
    h1_norm,
    helmholtz_inverse,
    orbital_distance,
    profile_grid,
    rhs,
    run,
    stability_experiment,
    step,
    translation_run,
    write_timeseries,
)
from bchlab.profile import build_profile


@pytest.fixture(scope="module")
def wave():
    p = make_params(2.0, 1.0, 0.25)
    grid, prof = profile_grid(build_profile(p, 256), 1024)
    return p, grid, prof


def test_grid_validation():
    for n in (100, 128, 1000):
        with pytest.raises(ValueError):
            SimGrid(10.0, n)
    with pytest.raises(ValueError):
        SimGrid(0.0, 256)
    g = SimGrid(12.0, 768 // 3 * 4)
    assert g.x[0] == -6.0 and g.dx == pytest.approx(12.0 / 1024)
    band = g.tail_band
    assert band.stop == math.ceil(1024 / 3) and band.start == 2 * band.stop // 3


def test_helmholtz_constant_and_mode():
    g = SimGrid(2 * np.pi, 256)
    assert np.allclose(helmholtz_inverse(np.full(256, 0.3), 0.3, g), 0.3, atol=1e-15)
    m = 0.1 + np.cos(5 * g.x)
    # (1 - d_xx)^(-1) cos(5x) = cos(5x) / 26
    assert np.allclose(helmholtz_inverse(m, 0.1, g), 0.1 + np.cos(5 * g.x) / 26, atol=1e-14)
    assert np.allclose(helmholtz_inverse(m, 0.1, length=g.L), helmholtz_inverse(m, 0.1, g))


def test_helmholtz_recovers_wave(wave):
    _, grid, prof = wave
    assert np.max(np.abs(helmholtz_inverse(prof.mu, prof.params.k, grid) - prof.phi)) <= 1e-8


def test_rhs_constant_and_traveling_wave(wave):
    p, grid, prof = wave
    flat = SimState(0.0, np.full(grid.N, 0.4), 0.4)
    assert np.max(np.abs(rhs(flat, grid, 2.0))) == 0.0
    # a wave moving right at speed c satisfies m_t = -c m_x
    dm = rhs(SimState(0.0, prof.mu, p.k), grid, p.b)
    mux = np.fft.irfft(1j * grid.xi * np.fft.rfft(prof.mu), grid.N)
    assert np.max(np.abs(dm + p.c * mux)) <= 1e-6 * np.max(np.abs(mux))


def test_linearized_single_mode():
    # m = k + delta cos(xi x): to first order m_t = delta xi k (1 + b / (1 + xi^2)) sin(xi x)
    g = SimGrid(2 * np.pi, 256)
    k, b, xi, delta = 0.3, 2.5, 4.0, 1e-8
    m = k + delta * np.cos(xi * g.x)
    want = delta * xi * k * (1 + b / (1 + xi**2)) * np.sin(xi * g.x)
    got = rhs(SimState(0.0, m, k), g, b, check_resolution=False)
    assert np.max(np.abs(got - want)) <= 1e-7 * np.max(np.abs(want))


def test_constant_state_is_steady():
    g = SimGrid(20.0, 256)
    s = SimState(0.0, np.full(256, 0.7), 0.7)
    for _ in range(1000):
        s = step(s, 0.01, g, 3.0)
    assert s.t == pytest.approx(10.0)
    assert np.max(np.abs(s.m - 0.7)) <= 1e-14


def test_orbital_distance_identity_and_shift(wave):
    _, grid, prof = wave
    d, x0 = orbital_distance(prof.mu, prof.mu, grid)
    assert d <= 1e-12 and abs(x0) <= 1e-9
    moved = prof.sample(grid.x - 0.7)[2]
    d, x0 = orbital_distance(moved, prof.mu, grid)
    assert x0 == pytest.approx(0.7, abs=1e-10)
    assert d <= 1e-10


def test_orbital_distance_bounds(wave):
    _, grid, prof = wave
    pert = 1e-3 * gaussian_bump(grid.x, 2.0, 0.5)
    d, _ = orbital_distance(prof.mu + pert, prof.mu, grid)
    assert d <= h1_norm(pert, grid) * (1 + 1e-12)
    # shifting the state by whole grid cells leaves the distance unchanged
    for r in (1, 37, 500):
        d2, _ = orbital_distance(np.roll(prof.mu + pert, r), prof.mu, grid)
        assert d2 == pytest.approx(d, rel=1e-12)


def test_h1_norm_single_mode():
    g = SimGrid(2 * np.pi, 256)
    # ||cos(3x)||_{H^1}^2 = (1 + 9) * pi
    assert h1_norm(np.cos(3 * g.x), g) == pytest.approx(math.sqrt(10 * math.pi), rel=1e-13)


def test_casimir_constant():
    g = SimGrid(10.0, 256)
    assert casimir(np.full(256, 4.0), g, 2.0) == pytest.approx(20.0)


def test_positivity_violation():
    g = SimGrid(10.0, 256)
    m = np.full(256, 0.5)
    m[3] = -0.1
    with pytest.raises(PositivityViolation) as exc:
        run(SimState(0.0, m, 0.5), g, 2.0, 1.0)
    assert isinstance(exc.value, SimulationError) and exc.value.reason


def test_resolution_error():
    g = SimGrid(10.0, 256)
    m = np.where(np.abs(g.x) < 1.0, 1.0, 0.5)
    with pytest.raises(ResolutionError):
        run(SimState(0.0, m, 0.5), g, 2.0, 1.0)


def test_blowup_guard(wave):
    p, grid, prof = wave
    m = prof.mu * (1 + 0.2 * gaussian_bump(grid.x))
    with pytest.raises(BlowUpError):
        run(SimState(0.0, m, p.k), grid, p.b, 1.0, n_records=2, blowup_factor=0.9)


def test_run_records_and_timeseries(wave, tmp_path):
    p, grid, prof = wave
    traj = run(SimState(0.0, prof.mu, p.k), grid, p.b, 1.0, n_records=5, mu_ref=prof.mu)
    assert traj.times.size == 6 and traj.times[-1] == pytest.approx(1.0)
    assert traj.dt <= cfl_dt(prof.mu, p.k, grid) * (1 + 1e-12)
    assert traj.steps * traj.dt == pytest.approx(1.0)
    assert traj.casimir_drift <= 1e-10
    assert np.all(np.diff(traj.mass) == pytest.approx(0.0, abs=1e-12))
    write_timeseries(traj, tmp_path / "t.csv")
    assert len((tmp_path / "t.csv").read_text().splitlines()) == 7


def test_time_step_refinement(wave):
    p, grid, prof = wave
    errs = []
    for dt in (0.02, 0.01):
        traj = run(SimState(0.0, prof.mu, p.k), grid, p.b, 2.0, dt=dt, n_records=1, mu_ref=prof.mu)
        errs.append(traj.distance[-1])
    assert errs[0] / errs[1] >= 8.0


def test_translation_run_short():
    p = make_params(3.0, 1.0, 0.1)
    traj, rel, shift_err = translation_run(p, 5.0, N=2048, n_records=5)
    assert rel <= 1e-4 and shift_err <= 1e-4


def test_steadiness_without_perturbation():
    p = make_params(2.0, 1.0, 0.25)
    coarse = stability_experiment(p, 0.0, 50.0, N=1024, n_records=10)
    rep = stability_experiment(p, 0.0, 50.0, N=2048, n_records=10)
    assert rep.d0 <= 1e-12 and rep.max_d <= 1e-6
    assert rep.verdict == "PASS"
    # the residual drift is spatial discretization error and shrinks under refinement
    assert rep.max_d < coarse.max_d / 4


def test_stability_report_b4():
    p = make_params(4.0, 1.0, 0.15)
    rep = stability_experiment(p, 0.01, 10.0, N=2048, n_records=20)
    assert rep.passed and rep.max_d <= 10 * rep.d0
    s = rep.summary()
    assert s["scope"] == SCOPE_NOTE and s["grid"]["N"] == 2048 and s["verdict"] == "PASS"


def test_stability_aborts_cleanly():
    p = make_params(2.0, 1.0, 0.25)
    rep = stability_experiment(p, -1.5, 1.0, N=1024)
    assert rep.verdict.startswith("ABORTED(") and not rep.passed
    assert rep.summary()["dt"] is None


def test_profile_grid_rejects_short_domain():
    prof = build_profile(make_params(2.0, 1.0, 0.25), 256)
    with pytest.raises(ValueError):
        profile_grid(prof, 1024, prof.half_length)
