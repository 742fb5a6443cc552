import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import cached_gsm, cached_instance
from hypercon import groundstate as G
from hypercon.constants import LsiParams
from hypercon.errors import DomainError, InfeasibleOnGrid
from hypercon.grid import Grid, build_measure, dirichlet_energy, dirichlet_operator, gaussian_measure, integrate, lebesgue

PARAMS = LsiParams(0.5, 0.2, 2.0)


@pytest.fixture(scope="module")
def flat():
    m = gaussian_measure(Grid.symmetric(8.0, 1601))
    return G.transform(m, np.zeros(m.grid.n))


def test_zero_potential_is_identity(flat):
    bulk = np.abs(flat.nodes) < 4
    assert_allclose(flat.psi.psi[bulk], 1.0, atol=1e-6)
    assert_allclose(flat.m_psi.weights[bulk], flat.base.weights[bulk], rtol=1e-5)
    assert flat.intertwining_error < 1e-6
    assert G.wkb_residual(flat) < 1e-6


def test_gaussian_quadratic_measure(gaussian_gsm, gaussian_instance):
    alpha = 2.0
    target = np.sqrt(alpha / np.pi) * np.exp(-alpha * gaussian_gsm.nodes**2)
    assert abs(gaussian_gsm.m_psi.total_mass - 1.0) < 1e-8
    dens = gaussian_gsm.m_psi.weights / gaussian_gsm.base.grid.h
    assert np.max(np.abs(dens[1:-1] - target[1:-1])) < 1e-3
    assert np.max(np.abs(gaussian_gsm.psi.psi - gaussian_instance.psi_exact)) < 1e-3


def test_intertwining(battery_name):
    assert cached_gsm(battery_name).intertwining_error < 1e-6


def test_transform_identity_random_u(gaussian_gsm):
    rng = np.random.default_rng(5)
    x = gaussian_gsm.nodes
    for _ in range(5):
        a, b, k = rng.uniform(-1, 1, 3)
        u = a * np.sin((1 + abs(k)) * x) + b * np.tanh(x) + 1.0
        scale = dirichlet_energy(gaussian_gsm.m_psi, u) + integrate(gaussian_gsm.m_psi, u * u)
        assert abs(G.ground_state_transform_identity(gaussian_gsm, u)) < 1e-5 * max(1, scale)


def test_entropy_split(gaussian_gsm):
    x = gaussian_gsm.nodes
    for u in (np.cos(x), 1 + x * x, np.exp(-x * x)):
        assert abs(G.entropy_split_residual(gaussian_gsm, u)) < 1e-8


def test_summation_by_parts(gaussian_gsm):
    m = gaussian_gsm.base
    x = m.nodes
    f, g = np.sin(x) * np.exp(-x * x / 20), np.cos(2 * x) * np.exp(-x * x / 20)
    f[[0, -1]] = g[[0, -1]] = 0
    lhs = integrate(m, dirichlet_operator(m).apply(f) * g)
    b = np.sqrt(m.density[:-1] * m.density[1:])
    rhs = float(np.sum(b * np.diff(f) * np.diff(g)) / m.grid.h)
    assert abs(lhs - rhs) < 1e-13


def test_wkb_gaussian(gaussian_gsm):
    # The raw residual carries an h^2 error growing roughly like x^4 across the bulk.
    raw = G.wkb_residual(gaussian_gsm)
    bulk_core = gaussian_gsm.bulk() & (np.abs(gaussian_gsm.nodes) <= 1.5)
    assert G.wkb_residual(gaussian_gsm, mask=bulk_core) < 1e-4
    coarse = cached_gsm("gaussian_quadratic", 2001)
    assert G.wkb_residual_extrapolated(coarse, gaussian_gsm) < min(1e-4, raw)
    with pytest.raises(DomainError):
        G.wkb_residual_extrapolated(gaussian_gsm, gaussian_gsm)


def test_wkb_potential_round_trip():
    inst = cached_instance("bounded_unbounded_psi")
    gsm = cached_gsm("bounded_unbounded_psi")
    bulk = inst.measure.density >= G.BULK_THRESHOLD * inst.measure.density.max()
    assert np.max(np.abs(gsm.psi.psi - inst.psi_exact)[bulk]) < 1e-3


def test_aida_identity_gaussian(gaussian_gsm):
    assert G.aida_identity_residual(gaussian_gsm) < 1e-4
    assert G.aida_exponential_residual(gaussian_gsm, 0.5) < 1e-4
    levels = np.linspace(0.0, 3.0, 5)
    assert all(r.ok for r in G.aida_level_sets(gaussian_gsm, levels))


def test_certificate_zero_potential():
    m = gaussian_measure(Grid.symmetric(8.0, 801))
    cert = G.lambda0_certificate(m, np.zeros(801), LsiParams(0.5, 1.0, 2.0), 0.0)
    assert cert.federbush_lower == pytest.approx(0.0, abs=1e-12)
    assert cert.aida_upper == pytest.approx(0.0, abs=1e-12)
    assert cert.M == pytest.approx(1.0, abs=1e-12)
    assert cert.ok


def test_certificate_quadratic_on_gaussian():
    # gamma = N(0, 1/2): ||e^{+-x^2}||_p = (1 -+ p)^{-+1/(2p)}; the lower bound needs nu > 2c.
    m = gaussian_measure(Grid.symmetric(8.0, 4001))
    V = m.nodes**2
    params = LsiParams(0.5, 0.25, 2.0)
    gsm = G.transform(m, V)
    cert = G.lambda0_certificate(m, V, params, gsm.lambda0)
    assert cert.ok
    assert_allclose(cert.aida_upper, -math.log(0.75) / 0.5, rtol=1e-8)
    assert_allclose(cert.federbush_lower, math.log(3.0) / 4.0, rtol=1e-8)
    assert cert.federbush_lower < gsm.lambda0 < cert.aida_upper


def test_moment_product_zero_potential(flat):
    rec = G.moment_product_check(flat, 0.5, 1.0, LsiParams(0.5, 1.0, 2.0))
    assert rec.ok
    assert abs(rec.rhs) < 1e-12


def test_moment_product_outside_rectangle(gaussian_gsm):
    with pytest.raises(DomainError):
        G.moment_product_check(gaussian_gsm, 2.0, 0.5, PARAMS)


def test_psi_inverse_bounds_ordered(gaussian_gsm):
    recs = G.psi_inverse_bound_check(gaussian_gsm, 0.5, PARAMS)
    assert all(r.ok for r in recs)
    assert recs[2].rhs <= recs[1].rhs


def test_distribution_stats(gaussian_gsm, flat):
    zero = G.distribution_stats(flat, 0.5, 2.0)
    # Only the Dirichlet boundary layer, of Gaussian-tail mass, has psi <= 1/2.
    assert zero.A_eps < 1e-20 and zero.C_K == 0.0
    for eps, Kv in ((0.5, 2.0), (0.1, 1.5)):
        a, b = G.distribution_stats(gaussian_gsm, eps, Kv), G.distribution_stats(gaussian_gsm, eps / 2, 2 * Kv)
        assert b.A_eps <= a.A_eps and b.C_K <= a.C_K
        assert 0 <= a.A_eps <= 1 and a.B_eps >= 0
    cert = G.lambda0_certificate(gaussian_gsm.base, gaussian_gsm.V, PARAMS, gaussian_gsm.lambda0)
    stats = G.distribution_stats(gaussian_gsm, 0.5, 1.2, PARAMS, cert.M)
    assert all(r.ok for r in stats.records())
    with pytest.raises(DomainError):
        G.distribution_stats(gaussian_gsm, 1.5, 2.0)


def test_dlsi_constant_and_zero(flat):
    params = LsiParams(0.5, 1.0, 2.0)
    recs = G.dlsi_check(flat, None, None, params)
    assert all(r.ok for r in recs)
    const = [r for r in recs if r.detail["function"] == 0]
    assert all(abs(r.lhs) < 1e-12 for r in const)


def test_dlsi_bounded(battery_name):
    gsm = cached_gsm(battery_name)
    inst = cached_instance(battery_name)
    recs = G.dlsi_check(gsm, None, None, inst.params, osc_V=inst.osc_V)
    assert all(r.ok for r in recs)
    assert len({r.detail["function"] for r in recs}) == 10


def test_consecutive_trivial_and_gaussian():
    m = gaussian_measure(Grid.symmetric(8.0, 4001))
    x = m.nodes
    res = G.consecutive_transform_check(m, x * x, np.zeros_like(x))
    assert np.max(np.abs(res.psi - res.psi1)) < 1e-12
    res = G.consecutive_transform_check(m, 1.0 * x * x, 2.0 * x * x)
    assert all(r.ok for r in res.records)
    assert abs(res.lambda_total - 1.0) < 1e-5


def test_aida_gap_estimate(gaussian_gsm, flat):
    zero = G.aida_gap_estimate(flat, 0.5, 1.0, 0.0)
    assert zero.feasible and zero.eps == 0.5 and zero.K == 2.0
    est = G.aida_gap_estimate(gaussian_gsm, 0.5, 1.0, 0.1)
    assert est.feasible
    assert G.spectral_gap(gaussian_gsm) >= 1.0 / est.gamma1
    more = G.aida_gap_estimate(gaussian_gsm, 0.5, 1.0, 0.5)
    assert more.log_R > est.log_R and more.gamma1 >= est.gamma1


def test_aida_gap_infeasible_is_reported():
    gsm = cached_gsm("malrieu_roberto")
    est = G.aida_gap_estimate(gsm, 0.25, 1.0, 20.0)
    assert not est.feasible and math.isinf(est.gamma1)
    with pytest.raises(InfeasibleOnGrid):
        G.aida_gap_estimate(gsm, 0.25, 1.0, 20.0, strict=True)


def test_lsi_on_base_gaussian():
    m = gaussian_measure(Grid.symmetric(8.0, 1601))
    us = G.smooth_test_functions(m.nodes)
    # e^{x/2} is an extremal of the Gaussian LSI; it is checked separately below.
    assert all(r.ok for r in G.lsi_check(m, 0.5, test_functions=us[:7] + us[8:]))
    extremal = G.lsi_check(m, 0.5, test_functions=[us[7]])[0]
    assert_allclose(extremal.lhs, extremal.rhs, rtol=1e-4)


def test_bounded_checks_example():
    gsm = cached_gsm("bounded_unbounded_psi")
    inst = cached_instance("bounded_unbounded_psi")
    recs = G.bounded_psi_checks(gsm, inst.params.c, inst.osc_V)
    assert all(r.ok for r in recs)
    assert {r.check for r in recs} == {"bounded_psi_upper", "bounded_psi_lower", "bounded_psi_inverse", "bounded_moment_product"}


def test_wkb_rejects_vanishing_psi():
    m = build_measure(Grid.symmetric(3.0, 301), np.ones(301))
    gsm = G.transform(lebesgue(m.grid), np.where(np.abs(m.nodes) < 1, 0.0, 0.0))
    psi = gsm.psi.psi.copy()
    psi[150] = 0.0
    broken = G.GroundStateMeasure(gsm.base, type(gsm.psi)(gsm.lambda0, gsm.psi.gap, psi, gsm.psi.lambda1, gsm.base), gsm.m_psi, gsm.F, gsm.gradF, gsm.V)
    with pytest.raises(DomainError):
        G.wkb_residual(broken)
