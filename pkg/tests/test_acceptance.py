"""Acceptance criteria 1-11; each test prints one PASS/FAIL line.

Tolerances are pinned in TOL. Runtimes are measured and checked against
the budget in BUDGET (seconds).
"""

import math
import time

import numpy as np
import pytest

from pointnls import (
    EvolutionConfig,
    PointInteractionOp,
    bc_residual,
    decay_fit,
    dnorm,
    drift,
    energy_bound_ratio,
    evolve,
    frac_resolvent_apply,
    gaussian_state,
    h_apply,
    inequality_report,
    krein_resolvent_apply,
    lp_norm,
    make_grid,
    picard_solve,
    rebase,
    synthesize,
)
from pointnls.diagnostics import BumpTestFunction, weak_residual
from pointnls.fractional import frac_quadrature

ALPHA_UNIT = -1 / (4 * math.pi)

TOL = {
    "norm2_rel": 1e-4,
    "eigen_residual": 1e-2,
    "resolvent_identity": 1e-3,
    "krein_round_trip": 1e-4,
    "rebase_pointwise": 1e-10,
    "rebase_bc": 1e-6,
    "mass_drift": 1e-4,
    "energy_drift": 1e-3,
    "halving_factor": (3.0, 5.0),
    "picard_ratio": 1.0,
    "midpoint_order": (3.0, 5.0),
    "decay_beta": (1.35, 1.65),
    "decay_l2": 0.02,
    "dnorm_growth": 10.0,
    "bound_ratio_stability": 0.05,
    "weak_residual": 1e-2,
    "weak_residual_gain": 2.0,
    "frac_scalar": 1e-6,
    "frac_mapping": 1e-3,
    "frac_semigroup": 1e-3,
    "gn_invariance": 1e-10,
    "gn_drift": 0.05,
}

BUDGET = {1: 1, 2: 5, 3: 10, 5: 300, 6: 600, 7: 600, 8: 900, 10: 120}


@pytest.fixture
def report(capsys):
    def emit(k, name, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {k:2d} ({name}): {detail}")
        return ok

    return emit


def _rel(grid, a, b):
    return lp_norm(grid, a - b, 2) / lp_norm(grid, b, 2)


def _within(x, bounds):
    return bounds[0] <= x <= bounds[1]


def test_c01_closed_form_spectrum(report):
    t0 = time.perf_counter()
    op = PointInteractionOp(make_grid(3, 40.0, 4096), ALPHA_UNIT)
    psi = synthesize(op.bound_domain_state())
    err = abs(lp_norm(op.grid, psi, 2) ** 2 * 8 * math.pi - 1)
    elapsed = time.perf_counter() - t0
    ok = op.energy == -1.0 and err <= TOL["norm2_rel"] and elapsed < BUDGET[1]
    assert report(1, "closed-form spectrum", ok,
                  f"E = {op.energy!r}; ||psi||^2 rel err {err:.2e} <= {TOL['norm2_rel']:.0e}; {elapsed:.2f} s")


def test_c02_eigen_consistency(report):
    t0 = time.perf_counter()
    res = []
    for N in (4096, 8192):
        op = PointInteractionOp(make_grid(3, 40.0, N), ALPHA_UNIT)
        b = op.bound_domain_state()
        psi = synthesize(b)
        res.append(lp_norm(op.grid, h_apply(b) - op.energy * psi, 2) / lp_norm(op.grid, psi, 2))
        if N == 4096:
            lam = op.gauge
            out = synthesize(krein_resolvent_apply(op, psi, lam))
            ident = _rel(op.grid, out, psi / (op.energy + lam))
    elapsed = time.perf_counter() - t0
    ok = res[0] <= TOL["eigen_residual"] and res[1] < res[0] and ident <= TOL["resolvent_identity"] and elapsed < BUDGET[2]
    assert report(2, "eigen-consistency", ok,
                  f"residual {res[0]:.2e} -> {res[1]:.2e} (N 4096 -> 8192); resolvent identity {ident:.2e}; {elapsed:.2f} s")


def test_c03_krein_round_trip(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for n, alpha in ((3, ALPHA_UNIT), (2, 0.0)):
        op = PointInteractionOp(make_grid(n, 40.0, 4096), alpha)
        for _ in range(5):
            s = gaussian_state(op, rng.uniform(0.2, 3), rng.uniform(0.3, 4), charge=rng.uniform(-2, 2))
            f = h_apply(s) + op.gauge * synthesize(s)
            worst = max(worst, _rel(op.grid, synthesize(krein_resolvent_apply(op, f, op.gauge)), synthesize(s)))
    elapsed = time.perf_counter() - t0
    ok = worst <= TOL["krein_round_trip"] and elapsed < BUDGET[3]
    assert report(3, "Krein round-trip", ok, f"worst of 10 states {worst:.2e}; {elapsed:.2f} s")


def test_c04_gauge_invariance(report):
    op = PointInteractionOp(make_grid(3, 40.0, 4096), ALPHA_UNIT)
    worst_pt, worst_bc = 0.0, 0.0
    for charge in (None, 0.0, 0.7):
        s = gaussian_state(op, 1.0, 1.2, charge=charge)
        v = synthesize(s)
        for mu in (1.5, 4.0, 25.0, 400.0):
            t = rebase(s, mu)
            worst_pt = max(worst_pt, np.max(np.abs(synthesize(t) - v)) / np.max(np.abs(v)))
            worst_bc = max(worst_bc, bc_residual(t))
    ok = worst_pt <= TOL["rebase_pointwise"] and worst_bc <= TOL["rebase_bc"]
    assert report(4, "gauge invariance", ok, f"pointwise {worst_pt:.2e}; bc residual {worst_bc:.2e}")


def test_c05_conservation(report):
    t0 = time.perf_counter()
    op = PointInteractionOp(make_grid(2, 40.0, 4096), 0.0)
    s0 = gaussian_state(op, 1.0, 1.0)
    drifts = []
    for dt in (1e-3, 5e-4):
        traj = evolve(op, s0, EvolutionConfig(p=2, sign=1, dt=dt, T=2.0, monitor_cadence=int(round(0.02 / dt))))
        assert traj.termination == "completed"
        drifts.append((drift(traj, "mass"), drift(traj, "energy")))
    elapsed = time.perf_counter() - t0
    fm, fe = drifts[0][0] / drifts[1][0], drifts[0][1] / drifts[1][1]
    ok = (drifts[0][0] <= TOL["mass_drift"] and drifts[0][1] <= TOL["energy_drift"]
          and _within(fm, TOL["halving_factor"]) and _within(fe, TOL["halving_factor"]) and elapsed < BUDGET[5])
    assert report(5, "conservation", ok,
                  f"mass drift {drifts[0][0]:.2e}, energy drift {drifts[0][1]:.2e}; "
                  f"halving factors {fm:.2f}, {fe:.2f}; {elapsed:.1f} s")


def test_c06_picard_contraction(report):
    t0 = time.perf_counter()
    op = PointInteractionOp(make_grid(3, 40.0, 4096), ALPHA_UNIT)
    s = gaussian_state(op, 1.0, 1.0, charge=0.0)
    s = (1 / dnorm(s)) * s
    T, M, sub = 0.1, 64, 2
    cfg = EvolutionConfig(p=1.3, sign=1)
    res = picard_solve(op, s, T, M, 5, cfg, substeps=sub)
    ref = synthesize(res.states[-1])
    errs = []
    for steps in (4, 8, 16):
        mcfg = EvolutionConfig(p=1.3, sign=1, dt=T / steps, T=T, monitor_cadence=steps, cn_substeps=M * sub // (2 * steps))
        errs.append(lp_norm(op.grid, synthesize(evolve(op, s, mcfg).states[-1]) - ref, 2))
    orders = [a / b for a, b in zip(errs, errs[1:])]
    elapsed = time.perf_counter() - t0
    rho = [res.ratios.get(k, math.nan) for k in range(2, 6)]
    ok = (all(r < TOL["picard_ratio"] for r in rho) and all(_within(o, TOL["midpoint_order"]) for o in orders)
          and elapsed < BUDGET[6])
    assert report(6, "Picard contraction", ok,
                  "rho_2..5 = " + ", ".join(f"{r:.3f}" for r in rho)
                  + "; midpoint error ratios " + ", ".join(f"{o:.2f}" for o in orders) + f"; {elapsed:.1f} s")


def test_c07_dispersive_decay(report):
    t0 = time.perf_counter()
    op = PointInteractionOp(make_grid(3, 80.0, 4096), 1.0)
    f = synthesize(gaussian_state(op, 1.0, 1.0))
    times = np.geomspace(1.0, 6.0, 26)
    sup = decay_fit(op, f, math.inf, times)
    l2 = decay_fit(op, f, 2.0, times)
    elapsed = time.perf_counter() - t0
    ok = _within(sup.beta, TOL["decay_beta"]) and abs(l2.beta) <= TOL["decay_l2"] and elapsed < BUDGET[7]
    assert report(7, "dispersive decay", ok,
                  f"max-norm beta {sup.beta:.4f} (target {sup.target}); L2 beta {l2.beta:.1e}; {elapsed:.1f} s")


def test_c08_global_existence(report):
    t0 = time.perf_counter()
    op = PointInteractionOp(make_grid(2, 40.0, 4096), 0.0)
    s0 = gaussian_state(op, 1.0, 1.0)
    growth, bounds, status = [], [], []
    for dt in (1e-3, 5e-4):
        traj = evolve(op, s0, EvolutionConfig(p=2, sign=-1, dt=dt, T=5.0, monitor_cadence=int(round(0.01 / dt))))
        status.append(traj.termination)
        dn = np.array([r.dnorm for r in traj.records])
        growth.append(dn.max() / dn[0])
        bounds.append(energy_bound_ratio(traj, 2.0))
    elapsed = time.perf_counter() - t0
    change = abs(bounds[1] / bounds[0] - 1)
    ok = (status == ["completed"] * 2 and growth[0] <= TOL["dnorm_growth"]
          and change <= TOL["bound_ratio_stability"] and elapsed < BUDGET[8])
    assert report(8, "global existence", ok,
                  f"{status[0]}; sup dnorm/dnorm0 {growth[0]:.3f}; bound ratio {bounds[0]:.4f} -> {bounds[1]:.4f} "
                  f"({change:.1e} change under dt/2); {elapsed:.1f} s")


def test_c09_delta_source_identity(report):
    out = []
    for N, dt in ((1024, 1e-2), (2048, 5e-3)):
        op = PointInteractionOp(make_grid(3, 30.0, N), ALPHA_UNIT)
        cfg = EvolutionConfig(p=1, dt=dt, T=1.0, scheme="linear-only", monitor_cadence=1)
        traj = evolve(op, op.bound_domain_state(), cfg)
        out.append(abs(weak_residual(traj, BumpTestFunction(0.1, 0.9, 1.0, 3), weight=0.0)))
    gain = out[0] / out[1]
    ok = out[0] <= TOL["weak_residual"] and gain >= TOL["weak_residual_gain"]
    assert report(9, "delta-source weak identity", ok,
                  f"residual {out[0]:.2e} -> {out[1]:.2e} (gain {gain:.1f}) under dt/2, 2N")


def test_c10_fractional(report):
    t0 = time.perf_counter()
    y = np.array([0.0, 1.0, 10.0, 100.0])
    scalar = max(np.max(np.abs(frac_quadrature(s).scalar(y, 1.0) / (y + 1) ** (-s / 2) - 1))
                 for s in (0.1, 0.5, 1.0, 1.5, 1.9))
    op = PointInteractionOp(make_grid(3, 40.0, 4096), ALPHA_UNIT)
    psi = synthesize(op.bound_domain_state())
    mapping = _rel(op.grid, frac_resolvent_apply(op, psi, 1.0), psi * (op.energy + op.gauge) ** -0.5)
    f = synthesize(gaussian_state(op, 1.0, 1.0))
    semigroup = _rel(op.grid, frac_resolvent_apply(op, frac_resolvent_apply(op, f, 0.5), 0.5),
                     frac_resolvent_apply(op, f, 1.0))
    elapsed = time.perf_counter() - t0
    ok = (scalar <= TOL["frac_scalar"] and mapping <= TOL["frac_mapping"] and semigroup <= TOL["frac_semigroup"]
          and elapsed < BUDGET[10])
    assert report(10, "fractional self-consistency", ok,
                  f"scalar {scalar:.1e}; spectral mapping {mapping:.1e}; semigroup {semigroup:.1e}; {elapsed:.1f} s")


def _family(op):
    return [gaussian_state(op, 1.0, w, charge=c) for w in (0.5, 0.75, 1.0, 1.5, 2.0) for c in (None, 0.0, 0.5, -0.5)]


def test_c11_gn_embedding(report):
    finite, inv, drift_max = True, 0.0, 0.0
    for n, alpha, q in ((3, 1.0, 2.5), (2, 0.0, 4.0)):
        tables = []
        for N in (1024, 2048):
            op = PointInteractionOp(make_grid(n, 20.0, N), alpha)
            table = []
            for s in _family(op):
                a = inequality_report(s, 2.0, [q])
                b = inequality_report(3.0 * s, 2.0, [q])
                for x, y in zip(a, b):
                    for key in ("gn_ratio", "embed_ratio"):
                        finite &= bool(np.isfinite(x[key]))
                        inv = max(inv, abs(x[key] / y[key] - 1))
                        table.append(x[key])
            tables.append(np.array(table))
        drift_max = max(drift_max, float(np.max(np.abs(tables[1] / tables[0] - 1))))
    ok = finite and inv <= TOL["gn_invariance"] and drift_max <= TOL["gn_drift"]
    assert report(11, "GN/embedding ratios", ok,
                  f"20 states x 2 dims, finite={finite}; amplitude invariance {inv:.1e}; N -> 2N drift {drift_max:.1e}")
