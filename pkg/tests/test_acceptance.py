"""The eleven acceptance criteria, each at its stated tolerance.

Each test records a one-line summary; conftest prints one PASS/FAIL line per
criterion at the end of the session.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from bchlab import exactpoly as ep
from bchlab.params import eval_P, eval_R, k_of_gamma, make_params
from bchlab.pdesim import SCOPE_NOTE, stability_experiment, translation_run
from bchlab.profile import build_profile, check_invariants, ode_residual
from bchlab.quadrature import (
    default_k_grid,
    dq_dh_fd,
    hypothesis_grid_check,
    i1_prime,
    i2_prime,
    monotonicity_scan,
    q_via_ubar,
    q_via_x,
    taylor_fit,
)

B_GRID = (1.5, 2.0, 2.5, 3.0, 4.0, 10.0)
H_GRID = (1.05, 1.1, 1.2, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 100.0)


@pytest.mark.criterion(1, "Res_nu(R, R') = b(b+1)(b-1) z^2 exactly, < 1 s")
def test_c01_r_eliminant(acceptance):
    t0 = time.perf_counter()
    res = ep.resultant_nu(ep.poly_R(), ep.poly_Rp())
    elapsed = time.perf_counter() - t0
    b = ep.BV
    diff = res - b * (b + 1) * (b - 1) * ep.Z**2
    acceptance.note(f"resultant {res}, {elapsed:.3f} s")
    assert diff.is_zero(), f"difference {diff}"
    assert elapsed < 1.0


@pytest.mark.criterion(2, "P-eliminant divisible by z^4 and l(z), < 1 s")
def test_c02_p_eliminant(acceptance):
    t0 = time.perf_counter()
    rep = ep.eliminant_P_report()
    elapsed = time.perf_counter() - t0
    acceptance.note(f"z^{rep.z_power}, cofactor {rep.cofactor}, {elapsed:.3f} s")
    assert rep.z_power >= 4
    assert rep.l_divides and rep.remainder.is_zero()
    # the archived cofactor reproduces the resultant exactly
    rebuilt = ep.Z**rep.z_power * ep.poly_l() * rep.cofactor
    assert (rebuilt - rep.resultant).is_zero()
    assert elapsed < 1.0


@pytest.mark.criterion(3, "R = 2z^3(z-2) at b=3 and P = 2z^4 at b=2, exact")
def test_c03_special_cases(acceptance):
    r3 = ep.h2_combination(3)
    p2 = ep.h1_combination(2)
    assert (r3 - 2 * ep.Z**3 * (ep.Z - 2)).is_zero()
    assert (p2 - 2 * ep.Z**4).is_zero()
    # the printed nu-polynomials give the same after nu = (1-z)^(b-1)
    assert (ep.substitute_integer_b(ep.poly_R(), 3) - r3).is_zero()
    assert (ep.substitute_integer_b(ep.poly_P(), 2) - p2).is_zero()
    acceptance.note(f"R(b=3) = {r3}, P(b=2) = {p2}")


@pytest.mark.criterion(4, "R(1), P(1), Taylor coefficients: exact integer b, <= 1e-6 fitted half-integer b")
def test_c04_boundary_taylor(acceptance):
    b = ep.BV
    assert (ep.poly_R().subs(z=1, nu=0) - (1 - b)).is_zero()
    assert (ep.poly_P().subs(z=1, nu=0) - 2 * (b - 1) ** 2).is_zero()
    for bi in (2, 3, 4, 5):
        bq = Fraction(bi)
        r = ep.taylor_coefficients(ep.poly_R(), bq, 3)
        p = ep.taylor_coefficients(ep.poly_P(), bq, 4)
        assert r == [0, 0, 0, bq / 6 * (1 - bq) * (1 + bq)]
        assert p == [0, 0, 0, 0, bq**2 * (bq + 1) * (bq - 1) ** 2 / 6]
        assert eval_R(1.0, bi) == 1 - bi and eval_P(1.0, bi) == 2 * (bi - 1) ** 2
    worst = 0.0
    for bf in (1.5, 2.5, 3.5):
        want_r = bf / 6 * (1 - bf) * (1 + bf)
        want_p = bf**2 * (bf + 1) * (bf - 1) ** 2 / 6
        err_r = abs(taylor_fit(eval_R, bf, 3) - want_r) / abs(want_r)
        err_p = abs(taylor_fit(eval_P, bf, 4) - want_p) / abs(want_p)
        worst = max(worst, err_r, err_p)
    acceptance.note(f"worst fitted relative error {worst:.1e}")
    assert worst <= 1e-6


def _grid_z(n=500):
    """500 nodes in (0, 1), dense near both endpoints."""
    near0 = np.geomspace(1e-8, 1e-2, 100)
    near1 = 1.0 - np.geomspace(1e-8, 1e-2, 100)
    mid = np.linspace(1e-2, 1.0 - 1e-2, n - 200 + 2)[1:-1]
    return np.sort(np.concatenate([near0, mid, near1]))


@pytest.mark.criterion(5, "R < 0 and P > 0 on a 200 x 500 (b, z) grid, < 30 s")
def test_c05_hypothesis_grid(acceptance):
    t0 = time.perf_counter()
    z = _grid_z()
    assert z.size == 500 and z[0] > 0 and z[-1] < 1
    rep = hypothesis_grid_check(np.linspace(1.1, 10.0, 200), z)
    elapsed = time.perf_counter() - t0
    acceptance.note(f"{rep.nodes} nodes, {len(rep.violations)} violations, "
                    f"max R/z^3 {rep.max_R_over_z3:.3g}, min P/z^4 {rep.min_P_over_z4:.3g}, {elapsed:.1f} s")
    assert rep.nodes == 100_000
    assert not rep.violations
    assert elapsed < 30.0


@pytest.fixture(scope="module")
def q_grid():
    """Q by both routes, I1', I2' and the FD slope on the 6 x 10 (b, h) grid."""
    t0 = time.perf_counter()
    rows = []
    for b in B_GRID:
        for h in H_GRID:
            p = make_params(b, 1.0, k_of_gamma(b, 1.0, 1.0 / h))
            rows.append({
                "b": b, "h": h,
                "qx": q_via_x(p).value, "qu": q_via_ubar(b, h).value,
                "i1": i1_prime(b, h).value, "i2": i2_prime(b, h).value,
                "fd": dq_dh_fd(b, h)[0],
            })
    route_time = time.perf_counter() - t0
    return rows, route_time


@pytest.mark.criterion(6, "q_via_x = q_via_ubar to 1e-6 relative on the 6 x 10 grid, < 1 min")
def test_c06_route_equivalence(acceptance):
    t0 = time.perf_counter()
    worst = 0.0
    for b in B_GRID:
        for h in H_GRID:
            p = make_params(b, 1.0, k_of_gamma(b, 1.0, 1.0 / h))
            qx, qu = q_via_x(p).value, q_via_ubar(b, h).value
            worst = max(worst, abs(qx - qu) / abs(qx))
    elapsed = time.perf_counter() - t0
    acceptance.note(f"worst relative difference {worst:.1e} over 60 points, {elapsed:.1f} s")
    assert worst <= 1e-6
    assert elapsed < 60.0


@pytest.mark.criterion(7, "1/2 h^-1/2 Q + I2' = 0 (1e-6) and FD_h Q = h^-1/2 I1' (1e-4)")
def test_c07_calculus_chain(acceptance, q_grid):
    rows, _ = q_grid
    worst2 = max(abs(0.5 * r["qx"] / math.sqrt(r["h"]) + r["i2"]) / abs(r["i2"]) for r in rows)
    worst1 = max(abs(r["fd"] - r["i1"] / math.sqrt(r["h"])) / abs(r["fd"]) for r in rows)
    acceptance.note(f"I2 identity worst {worst2:.1e}, derivative identity worst {worst1:.1e}")
    assert worst2 <= 1e-6
    assert worst1 <= 1e-4


@pytest.mark.criterion(8, "I1' > 0 and Q strictly increasing in k for b in {1.01, 1.5, 2, 3, 4, 10}")
def test_c08_monotonicity_scan(acceptance):
    margins = []
    for b in (1.01, 1.5, 2.0, 3.0, 4.0, 10.0):
        for c in (1.0, 2.0):
            rep = monotonicity_scan(b, c, default_k_grid(b, c, 12, hi_frac=0.97))
            assert rep.verdict == "PASS", rep.notes
            i1_rel = min(r.i1_margin / r.I1p for r in rep.rows)
            dq_rel = min(r.q_increment / abs(r.Q) for r in rep.rows[:-1])
            assert i1_rel > 0 and dq_rel > 0
            margins.append((b, c, min(r.i1_margin for r in rep.rows), dq_rel))
    low = min(margins, key=lambda m: m[2])
    acceptance.note(f"{len(margins)} scans x 12 k; smallest I1' margin {low[2]:.3e} at b={low[0]:g}, c={low[1]:g}; "
                    f"smallest relative Q increment {min(m[3] for m in margins):.3e}")


PROFILE_POINTS = [
    (2.0, 1.0, 0.25), (2.0, 1.0, 0.05), (2.0, 1.0, 0.32), (1.5, 1.0, 0.2), (3.0, 1.0, 0.1),
    (3.0, 2.0, 0.4), (4.0, 1.0, 0.15), (10.0, 1.0, 0.05), (1.01, 1.0, 0.3), (2.5, 1.0, 0.2),
]


@pytest.mark.criterion(9, "profiles: residual <= 1e-6, k < phi < c, mu > 0, mu -> k, decay within 2%, < 1 min")
def test_c09_profiles(acceptance):
    t0 = time.perf_counter()
    worst_res, worst_rate = 0.0, 0.0
    for b, c, k in PROFILE_POINTS:
        p = make_params(b, c, k)
        prof = build_profile(p, 2048)
        assert check_invariants(prof) == []
        assert np.all(prof.phi > k) and np.all(prof.phi < c) and np.all(prof.mu > 0)
        assert abs(prof.mu[0] - k) <= 1e-10 and abs(prof.mu[-1] - k) <= 1e-10
        worst_res = max(worst_res, ode_residual(prof))
        worst_rate = max(worst_rate, abs(prof.decay_exponent_fit - math.sqrt(p.gamma)) / math.sqrt(p.gamma))
    elapsed = time.perf_counter() - t0
    acceptance.note(f"10 points, worst residual {worst_res:.1e}, worst decay-rate error {worst_rate:.1e}, {elapsed:.1f} s")
    assert worst_res <= 1e-6
    assert worst_rate <= 0.02
    assert elapsed < 60.0


@pytest.mark.criterion(10, "N=4096, T=50/c: H1 orbital distance <= 1e-3 relative, Casimir drift <= 1e-8")
def test_c10_propagation(acceptance):
    p = make_params(2.0, 1.0, 0.25)
    traj, rel, shift_err = translation_run(p, 50.0 / p.c, N=4096)
    acceptance.note(f"relative distance {rel:.1e}, shift error {shift_err:.1e}, Casimir drift {traj.casimir_drift:.1e}")
    assert rel <= 1e-3
    assert traj.casimir_drift <= 1e-8
    assert shift_err <= 1e-3


@pytest.mark.criterion(11, "eps = 1% runs stay within 10x initial orbital distance to T=50/c, b in {2, 3, 4}")
def test_c11_stability_evidence(acceptance):
    ratios = []
    for b, k in ((2.0, 0.25), (3.0, 0.1), (4.0, 0.15)):
        p = make_params(b, 1.0, k)
        rep = stability_experiment(p, 0.01, 50.0 / p.c, N=4096)
        assert rep.verdict == "PASS", rep.summary()
        assert rep.summary()["scope"] == SCOPE_NOTE and "finite-horizon evidence" in SCOPE_NOTE
        ratios.append(f"b={b:g}: {rep.max_d / rep.d0:.2f}x")
    acceptance.note("max d / d(0): " + ", ".join(ratios) + " (finite-horizon evidence)")
