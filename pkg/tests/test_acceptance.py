"""Acceptance run: one test and one PASS/FAIL line per criterion.

Lines are collected in ``LINES`` and echoed in the terminal summary by conftest.
"""

import math

import numpy as np
import pytest

from conftest import cached_verify
from hypercon import constants as K
from hypercon import eckmann as E
from hypercon import groundstate as G
from hypercon import instances as I
from hypercon import semigroup as S
from hypercon.grid import Grid, gaussian_measure, lebesgue, observed_order, richardson, solve
from hypercon.verify import herbst_instance

LINES: list[str] = []

CS = np.geomspace(0.05, 5.0, 10)
FACTORS = np.geomspace(1.05, 50.0, 10)
KAPPAS = np.geomspace(0.01, 100.0, 10)
IDENTITY_TOL = 1e-10


def report(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def battery_records(check_prefixes, names=I.BATTERY):
    out = []
    for name in names:
        out.extend(r for r in cached_verify(name).records if r.check.startswith(tuple(check_prefixes)))
    return out


def summarize(records) -> str:
    bad = [r for r in records if not r.ok]
    first = f"; first failure {bad[0].check} [{bad[0].instance}]" if bad else ""
    return f"{len(records) - len(bad)}/{len(records)} records{first}"


def rel(a, b):
    return abs(a - b) / max(1.0, abs(a), abs(b))


def test_criterion_01_constant_identities():
    worst = 0.0
    rng = np.random.default_rng(0)
    for c in CS:
        for factor in FACTORS:
            p = K.LsiParams(c, 1.0, 2 * c * factor)
            ro = K.interval_roots(p)
            assert 1 < ro.q0 < 2 < ro.p0 < math.inf
            worst = max(worst, abs(1 / ro.p0 + 1 / ro.q0 - 1))
            worst = max(worst, rel((ro.p0 - 2) * (2 - ro.q0), (2 * p.nu / c) * ro.a_nu**2))
            for x in rng.uniform(-5, 20, 3):
                worst = max(worst, rel((2 * p.nu / c) * (x - 1) - x * x, (ro.p0 - x) * (x - ro.q0)))
            worst = max(worst, abs(K.tau(p, 2.0)))
            for x in np.linspace(ro.q0, min(ro.p0, 1e6), 7)[1:-1]:
                worst = max(worst, rel(K.tau(p, x / (x - 1)), -K.tau(p, x)))
                worst = max(worst, rel(K.tau(p, K.p_of_t(p, K.tau(p, x))), K.tau(p, x)) if x >= 2 else 0.0)
    for c in CS:
        for kappa in KAPPAS:
            p = K.LsiParams(c, kappa, 10 * c)
            mr = K.moment_roots(p)
            assert mr.s0 > 0 and 0 < mr.r0 < 1
            for t in (mr.s0, -mr.r0):
                worst = max(worst, rel(t * t, (2 * kappa / c) * (t + 1)))
            for t in rng.uniform(-5, 20, 3):
                worst = max(worst, rel((2 * kappa / c) * (t + 1) - t * t, (mr.s0 - t) * (t + mr.r0)))
            worst = max(worst, rel(2 / mr.s0 + 1, mr.b_kappa), rel(2 / mr.r0 - 1, mr.b_kappa))
            a = 2 * p.c_nu * p.b_kappa
            worst = max(worst, rel(K.ell(p, a), c * math.log(3) / (2 * p.b_kappa)))
    p = K.LsiParams(0.5, 1.0, 2.0)
    quad_err = abs(K.moment_product_exponent(p, 0.3, 1.0) - K.moment_product_quadrature(p, 0.3, 1.0))
    report(1, worst < IDENTITY_TOL and quad_err < 1e-8, f"max identity residual {worst:.2e} (tol 1e-10), quadrature {quad_err:.2e} (tol 1e-8)")


def test_criterion_02_eigensolver_accuracy():
    def osc(n):
        grid = Grid.symmetric(10.0, n)
        return solve(lebesgue(grid), grid.nodes**2)

    coarse, medium, fine = (osc(n) for n in (1001, 2001, 4001))
    lam = richardson(medium.lambda0, fine.lambda0)
    order = observed_order(coarse.lambda0, medium.lambda0, fine.lambda0)
    gap_err = abs(fine.gap - 2.0)
    ok = abs(lam - 1.0) < 1e-6 and gap_err < 1e-5 and abs(order - 2.0) < 0.2
    report(2, ok, f"lambda0 err {abs(lam - 1):.2e} extrapolated (raw {abs(fine.lambda0 - 1):.2e}), gap err {gap_err:.2e}, order {order:.3f}")


def test_criterion_03_gaussian_quadratic_closed_form():
    summary = cached_verify("gaussian_quadratic").summary["exact"]
    sup, lam = summary["psi_error_sup"], abs(summary["lambda0_error"])
    report(3, sup < 1e-3 and lam < 1e-5, f"sup|psi - exact| {sup:.2e} over the whole grid, raw lambda0 err {lam:.2e}")


def test_criterion_04_negative_potential_sharpness():
    rep = S.blowup_experiment(2.0, 8.0)
    recs = {r.check: r for r in rep.records}
    ok = (
        abs(rep.p0 - 6.828427) < 1e-5
        and recs["blowup_initial_stable"].ok
        and recs["blowup_divergence_past_t1"].ok
        and recs["blowup_control_L289"].ok
        and recs["blowup_residual"].ok
        and rep.growth_past > 10
    )
    report(
        4,
        ok,
        f"f(0) factor {rep.growth_initial:.6f}, factor at t1 {rep.growth_at_t1:.4f} (linear growth), "
        f"factor just past t1 {rep.growth_past:.1f}, p=4 bound slack {recs['blowup_control_L289'].slack:.3f}",
    )


@pytest.mark.xfail(strict=True, reason="the integrand of |f(t1)|^p1 is constant, so widening L from 8 to 16 doubles the integral exactly")
def test_criterion_04_literal_factor_at_t1():
    rep = S.blowup_experiment(2.0, 8.0)
    ok = rep.growth_at_t1 > 10
    line = f"criterion  4 (literal factor > 10 at t1): {'PASS' if ok else 'FAIL'}  factor {rep.growth_at_t1:.4f}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_05_positive_potential_sharpness():
    below = S.inverse_moment_experiment(1.9, 1.0, 3.0)
    above = S.inverse_moment_experiment(2.1, 1.0, 3.0)
    ok = (
        below.finite_expected
        and not above.finite_expected
        and abs(below.threshold - 2.0) < 1e-12
        and all(r.ok for r in below.records + above.records)
        and above.growth_double > 10
    )
    report(5, ok, f"threshold s={below.threshold}, s=1.9 rel change {below.log_change_wide:.1e}, s=2.1 growth {above.growth_double:.1f}")


def test_criterion_06_identity_residuals():
    recs = battery_records(["wkb_residual", "aida_identity", "aida_level_set"])
    assert {r.check for r in recs} >= {"wkb_residual", "aida_identity", "aida_identity_general", "aida_level_set"}
    # Level-set records are one-sided and near equality at low levels, so only residuals enter the ratio.
    worst = max(r.lhs / r.rhs for r in recs if r.check != "aida_level_set")
    report(6, all(r.ok for r in recs), f"{summarize(recs)}, worst residual/tolerance {worst:.2e}")


def test_criterion_07_lambda0_sandwich():
    recs = battery_records(["lambda0_federbush", "lambda0_aida_upper", "lambda0_mean_upper", "lambda0_product_identity"])
    assert len(recs) == 5 * len(I.BATTERY)
    report(7, all(r.ok for r in recs), summarize(recs))


def test_criterion_08_moment_product():
    recs = battery_records(["moment_product"])
    local = [r for r in recs if r.check == "moment_product_local"]
    assert len(recs) - len(local) == 16 * len(I.BATTERY)
    assert {r.detail["delta"] for r in local} == {0.1, 0.5, 1.0}
    report(8, all(r.ok for r in recs), summarize(recs))


def test_criterion_09_bounded_polynomial_bounds():
    recs = battery_records(["bounded_psi"], names=["bounded_unbounded_psi"])
    ps = {r.detail["p"] for r in recs if r.check == "bounded_psi_upper"}
    rs = {r.detail["r"] for r in recs if r.check == "bounded_psi_lower"}
    ss = {r.detail["s"] for r in recs if r.check == "bounded_psi_inverse"}
    assert ps == {2.0, 3.0, 4.0, 6.0} and rs == {0.5, 1.0} and ss == {1.0, 2.0, 4.0}
    report(9, all(r.ok for r in recs), summarize(recs))


def test_criterion_10_herbst_identity():
    lines, ok = [], True
    for which in ("linear", "F"):
        _, curve, _ = herbst_instance("gaussian_quadratic", which)
        recs = {r.check: r for r in curve.records}
        ok &= recs["herbst_identity"].ok and recs["herbst_limit"].ok
        lines.append(f"g={which}: identity {recs['herbst_identity'].lhs:.1e}, limit {recs['herbst_limit'].lhs:.1e}")
    report(10, ok, "; ".join(lines) + " (tol 1e-3, 1e-4)")


def test_criterion_11_entropy_envelope():
    _, curve, _ = herbst_instance("gaussian_quadratic", "F")
    recs = [r for r in curve.records if r.check == "entropy_envelope"]
    assert len(recs) == len(curve.t)
    tightest = max(r.lhs / r.rhs for r in recs)
    report(11, all(r.ok for r in recs), f"{summarize(recs)}, max r/beta {tightest:.3f}")


def test_criterion_12_consecutive_transforms():
    m = gaussian_measure(Grid.symmetric(8.0, 4001))
    x = m.nodes
    gauss = G.consecutive_transform_check(m, x * x, 2.0 * x * x, instance="gaussian_additive")
    mr = E.malrieu_roberto(1.0)
    recs = list(gauss.records) + [r for r in mr.records if r.check.startswith("consecutive")]
    assert len(recs) == 4
    detail = ", ".join(f"{r.instance}:{r.check} {r.lhs:.1e}" for r in recs)
    report(12, all(r.ok for r in recs), detail)


def test_criterion_13_main_theorem():
    recs = battery_records(["gap_vs_main_theorem"])
    assert len(recs) == len(I.BATTERY)
    slack = ", ".join(f"{r.instance.split('(')[0]} log slack {r.rhs - r.lhs:.1f}" for r in recs)
    report(13, all(r.ok for r in recs), slack)


def test_criterion_14_wang_rothaus():
    inst = I.build("wang_bounded")
    bb = K.bounded_potential_bounds(inst.params.c, inst.osc_V)
    assert inst.osc_V < bb.wang_threshold
    two_a, defect = bb.dlsi_coeff
    gap = K.wang_gap(two_a / 2, defect)
    tightened = K.rothaus_tighten(two_a / 2, 1 / gap, defect) if gap else math.inf
    numeric_gap = G.spectral_gap(G.transform(inst.measure, inst.V))
    dlsi = battery_records(["dlsi"], names=["wang_bounded"])
    functions = {r.detail["function"] for r in dlsi}
    ok = gap is not None and gap > 0 and math.isfinite(tightened) and numeric_gap >= gap and len(functions) == 10 and all(r.ok for r in dlsi)
    report(14, ok, f"Osc {inst.osc_V} < {bb.wang_threshold:.4f}, Wang gap {gap:.4f} <= numeric {numeric_gap:.4f}, tightened {tightened:.3f}, DLSI {summarize(dlsi)}")


FIRST_ORDER = [("power", {"r": 1}), ("power", {"r": 2}), ("polynomial", {}), ("slow_growth", {}), ("exponential", {})]


def test_criterion_15_eckmann_pipeline():
    parts, ok = [], True
    for name, kw in FIRST_ORDER + [("super", {})]:
        rep = E.run_example(name, **kw)
        expected = 2 if name == "super" else 1
        recs = list(rep.records) + list(rep.state.records(rep.name))
        closure = [r for r in recs if r.check == "wkb_closure"]
        ok &= rep.state.order == expected and bool(closure) and all(r.ok for r in recs)
        if name == "super":
            ok &= bool(rep.state.ratio_checks) and all(r.ok for r in rep.state.ratio_checks)
        parts.append(f"{rep.name} order {rep.state.order} closure {max(r.lhs for r in closure):.1e}")
    report(15, ok, "; ".join(parts))
