import dataclasses
import math

import numpy as np
import pytest

from bchlab.errors import InsufficientTailError
from bchlab.params import first_integral_normalized, make_params
from bchlab.profile import (
    build_profile,
    check_invariants,
    decay_fit,
    momentum_of,
    ode_residual,
    read_initial_condition,
    spectral_derivative,
    spectral_mu_error,
    write_csv,
    write_initial_condition,
)


@pytest.fixture(scope="module")
def ref():
    return build_profile(make_params(2.0, 1.0, 0.25), 2048)


def test_reference_crest(ref):
    assert ref.crest == pytest.approx(0.5, rel=1e-12)
    assert ref.x_samples[ref.n // 2] == 0.0
    assert ref.phi_prime[ref.n // 2] == 0.0
    assert check_invariants(ref) == []


def test_grid_layout(ref):
    dx = np.diff(ref.x_samples)
    assert np.allclose(dx, dx[0], rtol=1e-12)
    assert ref.x_samples[0] == pytest.approx(-ref.half_length)
    assert ref.length == pytest.approx(2 * ref.half_length)


def test_tails_monotone(ref):
    right = ref.phi[ref.n // 2:]
    assert np.all(np.diff(right) <= 0)
    assert np.all(ref.phi_prime[ref.n // 2 + 1:] < 0)
    assert np.all(ref.phi_prime[1:ref.n // 2] > 0)


def test_mu_tail_and_positivity(ref):
    assert np.all(ref.mu > 0)
    assert ref.mu[0] == pytest.approx(0.25, abs=1e-10)
    assert np.allclose(momentum_of(ref), ref.mu)


def test_points_lie_on_homoclinic_level(ref):
    p = ref.params
    amp = p.c - p.k
    x = ref.excess / amp
    y = ref.phi_prime / amp * np.sqrt(p.gamma) ** -1 * (1 - x) ** ((p.b - 1) / 2)
    # dx/dzeta = dx/dX * dX/dzeta with dX/dzeta = gamma^(-1/2) (1 - x)^((b-1)/2)
    lev = first_integral_normalized(x, y, p)
    big = x > 1e-6
    assert np.max(np.abs(lev[big] - p.homoclinic_level)) < 1e-9


def test_residual_and_perturbation_sensitivity(ref):
    base = ode_residual(ref)
    assert base <= 1e-8
    X = ref.x_samples
    bumped = dataclasses.replace(ref, phi=ref.phi + 1e-3 * np.exp(-X**2))
    assert ode_residual(bumped) > 10 * base
    assert ode_residual(bumped) > 1e-5


def test_constant_state_has_zero_residual(ref):
    k = ref.params.k
    flat = dataclasses.replace(ref, phi=np.full(ref.n, k), phi_prime=np.zeros(ref.n))
    assert ode_residual(flat) == pytest.approx(0.0, abs=1e-15)


def test_spectral_derivative():
    L, n = 2 * np.pi, 64
    x = L * np.arange(n) / n
    assert np.allclose(spectral_derivative(np.sin(3 * x), L), 3 * np.cos(3 * x), atol=1e-12)
    assert np.allclose(spectral_derivative(np.sin(3 * x), L, 2), -9 * np.sin(3 * x), atol=1e-11)


def test_spectral_mu_agrees(ref):
    assert spectral_mu_error(ref) < 1e-8


def test_decay_rate_b2(ref):
    assert ref.decay_exponent_fit == pytest.approx(math.sqrt(1 / 3), rel=1e-6)
    assert decay_fit(ref) == ref.decay_exponent_fit


@pytest.mark.parametrize("b, k", [(2.0, 0.32), (2.0, 0.05), (3.0, 0.1), (10.0, 0.05)])
def test_decay_rate_matches_sqrt_gamma(b, k):
    p = make_params(b, 1.0, k)
    prof = build_profile(p, 2048)
    assert prof.decay_exponent_fit == pytest.approx(math.sqrt(p.gamma), rel=1e-4)


def test_width_trends_with_gamma():
    # smaller gamma means slower decay and a wider wave
    wide = build_profile(make_params(2.0, 1.0, 0.32), 1024)
    narrow = build_profile(make_params(2.0, 1.0, 0.05), 1024)
    assert wide.params.gamma < narrow.params.gamma
    assert wide.half_length > narrow.half_length
    assert wide.crest - wide.params.k < narrow.crest - narrow.params.k


def test_insufficient_tail():
    p = make_params(2.0, 1.0, 0.25)
    prof = build_profile(p, 256, length=30.0)
    assert math.isnan(prof.decay_exponent_fit)
    with pytest.raises(InsufficientTailError):
        decay_fit(prof)


def test_small_n_rejected():
    with pytest.raises(ValueError):
        build_profile(make_params(2.0, 1.0, 0.25), 32)


def test_grid_refinement_consistent(ref):
    coarse = build_profile(ref.params, 1024)
    assert np.allclose(coarse.phi, ref.phi[::2], rtol=0, atol=1e-12)
    assert ode_residual(coarse) > ode_residual(ref)


def test_resample_matches_sample(ref):
    other = ref.resample(100.0, 512)
    phi, dphi, mu, _ = ref.sample(other.x_samples)
    assert np.array_equal(other.phi, phi) and np.array_equal(other.mu, mu)


def test_energy_drift(ref):
    assert ref.energy_drift <= 1e-9


def test_csv_and_initial_condition_round_trip(ref, tmp_path):
    write_csv(ref, tmp_path / "p.csv")
    data = np.loadtxt(tmp_path / "p.csv", delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 1], ref.phi)
    write_initial_condition(ref, tmp_path / "ic.json")
    ic = read_initial_condition(tmp_path / "ic.json")
    assert np.array_equal(ic["mu"], ref.mu)
    assert ic["header"]["N"] == 2048 and ic["header"]["b"] == 2.0
