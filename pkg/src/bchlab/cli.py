"""``bchlab`` command line: hypotheses, qscan, profile, simulate, phase.

Flags override values from ``--config FILE`` (a JSON object keyed by the
long flag names, with dashes or underscores).  Exit status: 0 when every
check passes, 1 when a verification fails, 2 on a usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, exactpoly as ep, plotting, report
from .errors import BchLabError, ParameterDomainError
from .params import WaveParams, eval_P, eval_R, make_params
from .pdesim import stability_experiment, translation_run
from .profile import (
    build_profile,
    check_invariants,
    ode_residual,
    spectral_mu_error,
    write_initial_condition,
)
from .quadrature import (
    default_k_grid,
    hypothesis_grid_check,
    level_curve_samples,
    monotonicity_scan,
    q_via_ubar,
    q_via_x,
    taylor_fit,
)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "b": 2.0,
    "c": 1.0,
    "k": 0.25,
    "k_grid": None,
    "b_set": None,
    "tol": 1e-10,
    "grid_n": None,
    "domain_L": None,
    "N": 4096,
    "T": None,
    "eps": 0.01,
    "out": "bchlab-out",
    "seed": 0,
    "workers": 1,
}
DEFAULT_B_SET = "3/2,2,5/2,3,4,10"


class ConfigError(BchLabError, ValueError):
    """Invalid command-line or config-file values."""


# ---------------------------------------------------------------------------
# config handling


def _parse_k_grid(text: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ConfigError(f"--k-grid expects lo:hi:n, got {text!r}") from exc


def _parse_b_set(text) -> list[Fraction]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    try:
        return [ep.parse_fraction(str(s).strip()) for s in items if str(s).strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"--b-set expects comma-separated rationals, got {text!r}") from exc


def _load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    out = {}
    for key, val in data.items():
        name = key.lstrip("-").replace("-", "_")
        if name not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = val
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(_load_config(args.config))
    for name in DEFAULTS:
        val = getattr(args, name, None)
        if val is not None:
            cfg[name] = val
    for name in ("b", "c", "k", "tol", "eps"):
        cfg[name] = float(cfg[name])
    for name in ("N", "seed", "workers"):
        cfg[name] = int(cfg[name])
    if cfg["tol"] <= 0 or cfg["workers"] < 1:
        raise ConfigError("--tol must be positive and --workers at least 1")
    return cfg


def _params(cfg) -> WaveParams:
    return make_params(cfg["b"], cfg["c"], cfg["k"])


def _outdir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(ok: bool, label: str, detail: str = "") -> bool:
    print(f"[{'PASS' if ok else 'FAIL'}] {label}" + (f": {detail}" if detail else ""))
    return ok


# ---------------------------------------------------------------------------
# commands


def _hypotheses_plan(args, cfg):
    b_set = _parse_b_set(cfg["b_set"] or DEFAULT_B_SET)
    for b in b_set:
        if not b > 1:
            raise ConfigError(f"b-set values must exceed 1 (got {b})")
    nz = int(cfg["grid_n"] or 500)
    if nz < 2:
        raise ConfigError("--grid-n must be at least 2")
    return b_set, nz


def cmd_hypotheses(args, cfg) -> int:
    b_set, nz = _hypotheses_plan(args, cfg)
    out = _outdir(cfg)
    rng = np.random.default_rng(cfg["seed"])
    extra = sorted({Fraction(int(n), int(d)) for n, d in zip(rng.integers(9, 80, 3), rng.integers(2, 9, 3))
                    if Fraction(int(n), int(d)) > 1})
    ok = True
    bundle = {}

    b = ep.BV
    target_r = b * (b + 1) * (b - 1) * ep.Z**2
    elim_r = ep.eliminant_R()
    diff_r = elim_r - target_r
    ok &= _say(diff_r.is_zero(), "Res_nu(R, R') = b(b+1)(b-1) z^2", "" if diff_r.is_zero() else str(diff_r))
    bundle["R_eliminant"] = {"resultant": str(elim_r), "expected": str(target_r), "difference": str(diff_r)}

    prep = ep.eliminant_P_report()
    p_ok = prep.z_power >= 4 and prep.l_divides and prep.remainder.is_zero()
    ok &= _say(p_ok, "Res_nu(P, (1-z)P') = z^4 l(z) * cofactor", f"cofactor {prep.cofactor}")
    bundle["P_eliminant"] = prep.to_dict()

    r_poly = ep.poly_R() + ep.Z**5 * ep.NU if args.corrupt_r else None
    ident = ep.verify_identity_expansions((2, 3, 4, 5), r_poly=r_poly)
    ok &= _say(ident.verdict == "PASS", "combinations equal printed R, P for b = 2..5")
    for chk in ident.checks:
        if chk.verdict != "PASS":
            print(f"    b={chk.b} {chk.which} difference: {chk.difference}")
    bundle["identities"] = ident.to_dict()

    special_r = ep.h2_combination(3) - 2 * ep.Z**3 * (ep.Z - 2)
    special_p = ep.h1_combination(2) - 2 * ep.Z**4
    ok &= _say(special_r.is_zero() and special_p.is_zero(), "R = 2z^3(z-2) at b=3 and P = 2z^4 at b=2")
    bundle["special_cases"] = {"R_b3_difference": str(special_r), "P_b2_difference": str(special_p)}

    bundle["boundary_taylor"] = _boundary_taylor_checks()
    ok &= _say(all(r["pass"] for r in bundle["boundary_taylor"]), "R(1), P(1) and leading Taylor coefficients")

    certs = []
    for bq in list(b_set) + [e for e in extra if e not in b_set]:
        for pair in ("R-pair", "P-pair"):
            certs.append(ep.certify_no_common_roots(pair, bq))
    ok &= _say(all(c.verdict == "PASS" for c in certs), "no common roots on (0, 1)",
               f"b in {{{', '.join(str(c) for c in sorted({c.b for c in certs}))}}}")
    bundle["certificates"] = [c.to_dict() for c in certs]

    b_grid = np.linspace(1.1, 10.0, 200)
    z_grid = np.linspace(0.0, 1.0, nz + 2)[1:-1]
    grid = hypothesis_grid_check(b_grid, z_grid)
    ok &= _say(grid.verdict == "PASS", f"R < 0 and P > 0 on {grid.nodes} grid nodes",
               f"{len(grid.violations)} violations")
    gd = grid.to_dict()
    bundle["grid"] = {k: v for k, v in gd.items() if k != "rows"}

    bundle["verdict"] = "PASS" if ok else "FAIL"
    report.write_json(out / "hypotheses.json", "hypotheses", cfg, cfg["seed"], bundle)
    report.write_csv(out / "hypothesis_grid.csv", "hypotheses", cfg, cfg["seed"], gd["rows"])
    plotting.hypothesis_curves([1.1, 1.5, 2, 3, 5, 10], out / "hypotheses.png")
    return EXIT_PASS if ok else EXIT_FAIL


def _boundary_taylor_checks() -> list[dict]:
    rows = []
    R, P = ep.poly_R(), ep.poly_P()
    b = ep.BV
    r1 = R.subs(z=1, nu=0) - (1 - b)
    p1 = P.subs(z=1, nu=0) - 2 * (b - 1) ** 2
    rows.append({"check": "R(1) = 1 - b", "pass": r1.is_zero(), "difference": str(r1)})
    rows.append({"check": "P(1) = 2(b-1)^2", "pass": p1.is_zero(), "difference": str(p1)})
    for bq in (Fraction(2), Fraction(3), Fraction(4), Fraction(3, 2), Fraction(5, 2), Fraction(7, 2)):
        want_r = bq / 6 * (1 - bq) * (1 + bq)
        want_p = bq**2 * (bq + 1) * (bq - 1) ** 2 / 6
        got_r = ep.taylor_coefficients(R, bq, 3)
        got_p = ep.taylor_coefficients(P, bq, 4)
        exact_ok = got_r[3] == want_r and got_p[4] == want_p and not any(got_r[:3]) and not any(got_p[:4])
        fit_r = taylor_fit(eval_R, float(bq), 3)
        fit_p = taylor_fit(eval_P, float(bq), 4)
        rel_r = abs(fit_r - float(want_r)) / abs(float(want_r))
        rel_p = abs(fit_p - float(want_p)) / abs(float(want_p))
        rows.append({
            "check": f"Taylor b={bq}", "pass": exact_ok and rel_r <= 1e-6 and rel_p <= 1e-6,
            "R3_exact": str(got_r[3]), "P4_exact": str(got_p[4]), "R3_fit_rel": rel_r, "P4_fit_rel": rel_p,
        })
    return rows


def _qscan_plan(cfg):
    bs = [float(v) for v in _parse_b_set(cfg["b_set"])] if cfg["b_set"] else [cfg["b"]]
    plans = []
    for b in bs:
        if cfg["k_grid"]:
            lo, hi, n = _parse_k_grid(cfg["k_grid"])
            if n < 3:
                raise ConfigError("--k-grid needs at least 3 points")
            ks = np.linspace(lo, hi, n)
        else:
            ks = default_k_grid(b, cfg["c"])
        for k in ks:
            make_params(b, cfg["c"], float(k))
        plans.append((b, ks))
    return plans


def cmd_qscan(args, cfg) -> int:
    plans = _qscan_plan(cfg)
    out = _outdir(cfg)
    ok = True
    rows, reports = [], []
    for b, ks in plans:
        rep = monotonicity_scan(b, cfg["c"], ks, cfg["tol"], workers=cfg["workers"])
        reports.append(rep)
        rows.extend(rep.to_rows())
        min_i1 = min(r.i1_margin for r in rep.rows)
        ok &= _say(rep.verdict == "PASS", f"Q increasing in k, b={b:g}", f"{len(ks)} points, min I1' margin {min_i1:.3e}")
        for note in rep.notes:
            print(f"    {note}")
        tag = f"{b:g}".replace(".", "p")
        plotting.q_scan(rep, out / f"qscan_b{tag}.png")
    payload = {"verdict": "PASS" if ok else "FAIL", "scans": [{**r.to_dict(), "b": b} for r, (b, _) in zip(reports, plans)]}
    report.write_json(out / "qscan.json", "qscan", cfg, cfg["seed"], payload)
    report.write_csv(out / "qscan.csv", "qscan", cfg, cfg["seed"], rows)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_profile(args, cfg) -> int:
    p = _params(cfg)
    n = int(cfg["grid_n"] or 2048)
    if n < 64:
        raise ConfigError("--grid-n must be at least 64 for profiles")
    out = _outdir(cfg)
    prof = build_profile(p, n, length=cfg["domain_L"] and float(cfg["domain_L"]))
    bad = check_invariants(prof)
    res = ode_residual(prof)
    scale = p.c * p.k + 0.5 * (p.b + 1.0) * p.k**2 + p.c * float(np.max(prof.mu))
    mu_err = spectral_mu_error(prof)
    rate_err = abs(prof.decay_exponent_fit - math.sqrt(p.gamma)) / math.sqrt(p.gamma)
    ok = _say(not bad, "profile invariants", "; ".join(bad))
    ok &= _say(res <= 1e-6 * scale, "ODE residual", f"{res:.3e} (scale {scale:.3g})")
    ok &= _say(mu_err <= 1e-6, "spectral mu agrees with algebraic mu", f"{mu_err:.3e}")
    ok &= _say(rate_err <= 0.02, "tail decay rate vs sqrt(gamma)",
               f"{prof.decay_exponent_fit:.6f} vs {math.sqrt(p.gamma):.6f}")
    ok &= _say(prof.energy_drift <= 1e-9, "first-integral drift", f"{prof.energy_drift:.2e}")
    payload = {
        "verdict": "PASS" if ok else "FAIL", "profile": prof.header(), "invariant_violations": bad,
        "ode_residual": res, "residual_scale": scale, "mu_spectral_error": mu_err,
        "sqrt_gamma": math.sqrt(p.gamma), "decay_rate_rel_error": rate_err,
        "crest": prof.crest, "mu_min": float(prof.mu.min()),
    }
    report.write_json(out / "profile.json", "profile", cfg, cfg["seed"], payload)
    report.write_csv(out / "profile.csv", "profile", cfg, cfg["seed"],
                     zip(prof.x_samples, prof.phi, prof.phi_prime, prof.mu), ["x", "phi", "phi_prime", "mu"])
    write_initial_condition(prof, out / "profile_ic.json")
    plotting.profile(prof, out / "profile.png")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_simulate(args, cfg) -> int:
    p = _params(cfg)
    T = float(cfg["T"]) if cfg["T"] is not None else 50.0 / p.c
    if T <= 0 or cfg["eps"] < 0 or cfg["N"] < 256 or cfg["N"] & (cfg["N"] - 1):
        raise ConfigError("--T must be positive, --eps non-negative and --N a power of two >= 256")
    L = float(cfg["domain_L"]) if cfg["domain_L"] is not None else None
    out = _outdir(cfg)
    traj, rel, shift_err = translation_run(p, T, N=cfg["N"], L=L)
    ok = _say(rel <= 1e-3, "unperturbed wave translates", f"relative H1 distance {rel:.2e}, shift error {shift_err:.1e}")
    ok &= _say(traj.casimir_drift <= 1e-8, "Casimir drift", f"{traj.casimir_drift:.2e}")
    rep = stability_experiment(p, cfg["eps"], T, N=cfg["N"], L=L)
    ok &= _say(rep.passed, f"perturbed run, eps={cfg['eps']:g}",
               f"{rep.verdict}, d0={rep.d0:.3e}, max d={rep.max_d:.3e} ({rep.reason or rep.scope})")
    payload = {
        "verdict": "PASS" if ok else "FAIL",
        "translation": {"relative_distance": rel, "shift_error": shift_err, "casimir_drift": traj.casimir_drift,
                        "dt": traj.dt, "steps": traj.steps, "norm_scale": "||mu - k||_H1"},
        "stability": rep.summary(),
        "tolerances": {"translation": 1e-3, "casimir": 1e-8, "stability_factor": rep.factor},
    }
    report.write_json(out / "simulate.json", "simulate", cfg, cfg["seed"], payload)
    if rep.trajectory is not None:
        report.write_csv(out / "simulate.csv", "simulate", cfg, cfg["seed"], rep.trajectory.rows(),
                         ["t", "d", "shift", "casimir", "mass", "max_m"])
        plotting.distance(rep.trajectory, out / "distance.png", f"b={p.b:g}, k={p.k:g}, eps={cfg['eps']:g}")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_phase(args, cfg) -> int:
    p = _params(cfg)
    out = _outdir(cfg)
    loop = level_curve_samples(p.b, gamma=p.gamma, n=400, coords="xy", c=p.c)
    curve = level_curve_samples(p.b, h=p.h, n=400, coords="zu")
    ok = _say(loop.residual <= 1e-10, "homoclinic samples on the level set", f"residual {loop.residual:.2e}")
    ok &= _say(curve.residual <= 1e-10, "Gamma_h samples on A/B - ubar^2 = h", f"residual {curve.residual:.2e}")
    qx, qu = q_via_x(p, cfg["tol"]), q_via_ubar(p.b, p.h, cfg["tol"])
    rel = abs(qx.value - qu.value) / abs(qx.value)
    ok &= _say(rel <= 1e-6, "Q by both routes", f"{qx.value:.12g} vs {qu.value:.12g}")
    payload = {
        "verdict": "PASS" if ok else "FAIL", "params": p.as_dict(), "x_max": qx.turning_point,
        "z_t": qu.turning_point, "level_residual_xy": loop.residual, "level_residual_zu": curve.residual,
        "Q_x": qx.value, "Q_ubar": qu.value, "Q_relative_difference": rel,
    }
    report.write_json(out / "phase.json", "phase", cfg, cfg["seed"], payload)
    report.write_csv(out / "phase_homoclinic.csv", "phase", cfg, cfg["seed"], loop.to_rows())
    report.write_csv(out / "phase_gamma_h.csv", "phase", cfg, cfg["seed"], curve.to_rows())
    plotting.phase_portrait(p, out / "phase_portrait.png")
    plotting.gamma_h_curves(p.b, sorted({1.2, 2.0, p.h, 5.0}), out / "gamma_h.png")
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "hypotheses": cmd_hypotheses,
    "qscan": cmd_qscan,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "phase": cmd_phase,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--b", type=float, help="nonlinearity parameter b > 1")
    common.add_argument("--c", type=float, help="wave speed c > 0")
    common.add_argument("--k", type=float, help="background level 0 < k < c/(b+1)")
    common.add_argument("--k-grid", dest="k_grid", help="k grid as lo:hi:n")
    common.add_argument("--b-set", dest="b_set", help="comma-separated rational b values, e.g. 3/2,2,5/2")
    common.add_argument("--tol", type=float, help="quadrature tolerance")
    common.add_argument("--grid-n", dest="grid_n", type=int, help="z points (hypotheses) or profile samples")
    common.add_argument("--domain-L", dest="domain_L", type=float, help="periodic domain length")
    common.add_argument("--N", type=int, help="PDE grid points (power of two)")
    common.add_argument("--T", type=float, help="final time (default 50/c)")
    common.add_argument("--eps", type=float, help="perturbation amplitude")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--workers", type=int, help="worker processes for scans")
    common.add_argument("--config", help="JSON config file; flags take precedence")
    common.add_argument("--corrupt-r", dest="corrupt_r", action="store_true", help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="bchlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"bchlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "hypotheses": "exact eliminants, identity checks, Sturm certificates and the sign grid",
        "qscan": "Q(k) scan with derivative integrals",
        "profile": "build a solitary-wave profile and check it",
        "simulate": "propagate the wave and a perturbed copy",
        "phase": "phase-plane samples and the two Q routes",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "hypotheses":
            _hypotheses_plan(args, cfg)
        elif args.command == "qscan":
            _qscan_plan(cfg)
        else:
            _params(cfg)
    except (ConfigError, ParameterDomainError, ValueError, TypeError) as exc:
        print(f"bchlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, ParameterDomainError) as exc:
        print(f"bchlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BchLabError as exc:
        print(f"bchlab: verification failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
