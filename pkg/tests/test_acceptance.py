"""Acceptance suite: the ten criteria at their stated tolerances.

Each test records one PASS/FAIL line (collected into the terminal summary by
conftest) and then asserts.  Ground states come from the per-p reference
grids in bozk.ground_state.REFERENCE_GRIDS.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import reference_gs
from bozk.evolution import (EvolutionState, Integrator, begout_check, bound_criteria,
                            cond_values, energy_chain_monitor, evolve, step, translate)
from bozk.ground_state import initial_guess, petviashvili_solve
from bozk.sharp_constant import (Grid1D, bo_profile_1d, critical_threshold, lower_bound_check,
                                 max_gn1d_quotient, one_d_constant, rho_report, sech_profile_1d,
                                 verify_inequality)
from bozk.spectral import RealField, make_grid

RESULTS = []

pytestmark = pytest.mark.acceptance


def record(n, title, checks):
    """checks: list of (label, value, ok).  Prints and stores one line."""
    ok = all(c[2] for c in checks)
    detail = "; ".join(f"{lab}={val:.3e}" if isinstance(val, float) else f"{lab}={val}"
                       for lab, val, _ in checks)
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append((n, line))
    print(line)
    bad = [lab for lab, _, good in checks if not good]
    assert ok, f"criterion {n} failed checks: {bad}"


def rel(a, b):
    return abs(a - b) / abs(b)


CASES = ["1/1", "4/3", "2/1"]


def test_c01_pohozaev():
    checks = []
    for p in CASES:
        gs = reference_gs(p)
        checks.append((f"res[{p}]", gs.residual, gs.residual < 1e-10))
        for k, v in gs.pohozaev.rel_errors().items():
            checks.append((f"{k}[{p}]", abs(v), abs(v) < 1e-6))
    record(1, "Pohozaev ratios within 1e-6", checks)


def test_c02_k_identity_and_action():
    checks = []
    for p in CASES:
        r = reference_gs(p).report
        checks.append((f"K/I[{p}]", abs(r.K / r.I), abs(r.K / r.I) < 1e-6))
        s = abs(r.S / (0.5 * r.dxsq) - 1)
        checks.append((f"S[{p}]", s, s < 1e-8))
    record(2, "K ~ 0 (1e-6 I) and S = dxsq/2 (1e-8)", checks)


def test_c03_route_agreement():
    checks = []
    for p in CASES:
        spread = rho_report(reference_gs(p)).spread
        checks.append((f"spread[{p}]", spread, spread < 1e-8))
    record(3, "four rho^-1 routes agree to 1e-8", checks)


def test_c04_dominance():
    checks = []
    for p, seed in (("1/1", 11), ("2/1", 12)):
        rep = rho_report(reference_gs(p))
        m = verify_inequality(seed, 1000, p, rep.rho_inv,
                              include=[("phi", rep.rho_inv_via_quotient)])
        n_random = len(m.A_value) - 1
        checks.append((f"n[{p}]", n_random, n_random >= 1000))
        checks.append((f"min_rel[{p}]", m.min_rel_margin, m.min_rel_margin >= -1e-8))
        checks.append((f"phi[{p}]", abs(m.extra["margin_phi"]), abs(m.extra["margin_phi"]) <= 1e-8))
    record(4, "min A(u) >= rho^-1 (1 - 1e-8), equality at phi", checks)


def test_c05_critical():
    gs = reference_gs("4/3")
    r = gs.report
    thr = critical_threshold(rho_report(gs).rho)
    e = abs(r.E / r.I)
    t = rel(thr, 4 / 27 * r.l2sq ** 2)
    record(5, "p=4/3: E ~ 0 and threshold = (4/27)|phi|^4",
           [("E/I", e, e < 1e-6), ("threshold", t, t < 1e-10)])


# the r=2 profile decays like 2/x^2, so it is 1e-5 of peak at the L=400 edge
@pytest.mark.filterwarnings("ignore::bozk.sharp_constant.TruncationWarning")
def test_c06_one_d():
    c42 = one_d_constant(4, 2, sech_profile_1d(2, Grid1D(1024, 40.0)))
    target = math.sqrt(3) / 3
    worst = max_gn1d_quotient(2024, 10_000, 4, 2.0)
    big = Grid1D(2 ** 15, 400.0)
    psi = bo_profile_1d(2.0, big)
    err = float(np.max(np.abs(psi.values - 2 / (1 + big.x ** 2))))
    record(6, "C_{4,2} = sqrt(3)/3, 1e4 random fields, r=2 profile", [
        ("C42", rel(c42, target), rel(c42, target) < 1e-8),
        ("max_excess", worst / target - 1, worst / target - 1 <= 1e-6),
        ("profile_err", err, err < 1e-4),
        ("psi1_l2sq", rel(psi.l2sq, 2 * math.pi), rel(psi.l2sq, 2 * math.pi) < 1e-4),
    ])


def test_c07_corollary():
    checks = []
    for p in ("4/5", "2/1"):
        d = lower_bound_check(reference_gs(p))
        checks.append((f"slack[{p}]", d["slack"], (not d["skipped"]) and d["slack"] >= -1e-6))
    record(7, "|phi| >= |psi_2| |psi_1|", checks)


def test_c08_conservation_and_dispersion():
    g = make_grid(128, 128, 4 * math.pi, 4 * math.pi)
    u0 = initial_guess(g, 0.1, 1.0, 1.0)
    tr = evolve(u0, 2, 1.0, 0.01, sample_every=10)
    half = evolve(u0, 2, 1.0, 0.005, sample_every=20)
    ratio = tr.energy_drift / half.energy_drift
    # linear regime: amplitude 1e-8 single mode against the exact propagator
    g32 = make_grid(32, 32, 2 * math.pi, 2 * math.pi)
    X, Y = g32.mesh()
    kx, ky = 1.5, 1.0
    s = EvolutionState(0.0, RealField(g32, 1e-8 * np.cos(kx * X + ky * Y)), Fraction(2))
    c0 = s.uh[2, 3]
    integ = Integrator(g32, 2, 0.01)
    for _ in range(100):
        s = step(s, 0.01, integrator=integ)
    phase = abs(s.uh[2, 3] - c0 * np.exp(1j * (kx * abs(kx) + kx * ky ** 2))) / abs(c0)
    record(8, "drifts, 4th order, linear phase", [
        ("mass", tr.mass_drift, tr.mass_drift < 1e-10),
        ("energy", tr.energy_drift, tr.energy_drift < 1e-8),
        ("ratio", ratio, 12 <= ratio <= 20),
        ("phase", float(phase), phase < 1e-10),
    ])


def test_c09_soliton():
    g = make_grid(256, 64, 20 * math.pi, 5 * math.pi)
    gs = petviashvili_solve(1, g, tol=1e-12, dealias=True)
    tr = evolve(gs.phi, 1, 1.0, 0.0025, sample_every=40)
    ref = translate(gs.phi, 1.0)
    err = float(np.linalg.norm(tr.final_state.u.values - ref.values) / np.linalg.norm(ref.values))
    record(9, "u0 = phi (p=1) -> phi(x - t, y)", [
        ("shape_err", err, err < 1e-4),
        ("energy", tr.energy_drift, tr.energy_drift < 1e-8),
    ])


def test_c10_bootstrap():
    gs = reference_gs("2/1")
    g = make_grid(512, 512, 4 * math.pi, 4 * math.pi)
    u0 = initial_guess(g, 0.8, 1.0, 1.0)
    c = bound_criteria(u0, 2, gs)
    tr = evolve(u0, 2, 1.0, 0.01, sample_every=5, criteria=c)
    mon = energy_chain_monitor(tr, c.rho, c)
    bo = begout_check(c.a, c.b, c.q, tr.G)
    # at p = 4/3 both supercritical conditions must reduce to the L2 threshold
    ph = reference_gs("4/3").report
    reduce_ok = True
    for amp in (0.3, 0.5, 0.6, 0.61, 0.63, 0.7, 1.0, 1.2):
        m = amp ** 2 * ph.l2sq
        cv = cond_values(Fraction(4, 3), m, amp ** 2 * ph.hdot, amp ** 2 * ph.E + 0.1,
                         ph.l2sq, ph.hdot, ph.E)
        want = m ** 2 < 4 / 27 * ph.l2sq ** 2
        reduce_ok &= (cv["lhs1"] < cv["rhs1"]) == want and (cv["lhs2"] < cv["rhs2"]) == want
    record(10, "G < theta and the Hdot bound along a p=2 trace", [
        ("cond1", c.cond1_margin, bool(c.cond1_ok)),
        ("cond2", c.cond2_margin, bool(c.cond2_ok)),
        ("equivalences", c.equivalences_hold, bool(c.equivalences_hold)),
        ("max_G/theta", mon["max_G"] / mon["theta"], mon["G_below_theta"]),
        ("min_hdot_margin", mon["min_cond3_margin"], mon["hdot_bound_holds"]),
        ("chain_min_f", mon["min_f"], mon["chain_holds"]),
        ("lemma_hyps", bo["hypotheses_hold"], bo["hypotheses_hold"] and not bo["inconsistent"]),
        ("resolved", tr.resolved, tr.resolved),
        ("critical_reduction", reduce_ok, reduce_ok),
    ])
