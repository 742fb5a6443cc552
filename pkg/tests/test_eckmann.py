import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hypercon import eckmann as E
from hypercon.errors import ConditionFailed, ConfigError, DomainError, TailDivergence

FIRST_ORDER = [("power", dict(r=1)), ("power", dict(r=2)), ("polynomial", {}), ("slow_growth", {}), ("exponential", {})]


@pytest.mark.parametrize("r, lam, x0", [(1, 1.0, 1.0), (2, 1.0, 1.0), (2, 2.0, 1.5), (3, 0.5, 2.0)])
def test_power_conditions(r, lam, x0):
    rep = E.check_eckmann_conditions(E.power(r, lam, x0), x0)
    assert rep.ok
    assert_allclose(rep.a, math.sqrt(lam) * r * x0 ** (r - 1), rtol=1e-6)
    assert_allclose(rep.k, 2 * r / x0, rtol=1e-6)


def test_exponential_conditions():
    c, x0 = 1.0, 1.5
    rep = E.check_eckmann_conditions(E.exponential(c, x0), x0)
    assert rep.ok
    assert_allclose(rep.a, c * math.exp(c * x0), rtol=1e-6)
    assert_allclose(rep.k, 2 * c, rtol=1e-6)


def test_super_exponential_routes_to_second_order():
    rep = E.check_eckmann_conditions(E.super_exponential(0.5), 1.0, x_max=4.0)
    assert not rep.ok and not rep.k_bounded


def test_condition_failure_names_point():
    # slope of sqrt(V) is negative on the probe when V decreases past x0
    pot = E.polynomial((2.0, -2.0, 1.0), x0=0.5)
    with pytest.raises(ConditionFailed) as info:
        E.check_eckmann_conditions(pot, 0.5)
    assert info.value.where is not None


def test_find_x0():
    x0 = E.find_x0(E.polynomial())
    assert_allclose(x0, 1.1025, atol=1e-3)
    assert E.check_eckmann_conditions(E.polynomial(), x0).ok


def test_named_potential():
    assert E.named_potential("power", r=2).name.startswith("power")
    with pytest.raises(ConfigError):
        E.named_potential("nope")


def test_quartic_intermediate_state():
    state = E.build_intermediate(E.power(2, 1.0, 1.0))
    assert (state.a, state.b) == pytest.approx((2.0, 1.0))
    assert state.c_F_bound == pytest.approx(1 / (2 * min(state.a, state.b)))
    x = np.linspace(1.5, 4.0, 6)
    F = state.F(x)
    # Tail F(x) = x^3/3 + const.
    assert_allclose(np.diff(F), np.diff(x**3 / 3), rtol=1e-9)
    assert_allclose(state.V_minus_W(x), 2 * x, rtol=1e-9)
    assert all(r.ok for r in state.records())
    assert max(state.continuity_jumps()) < 1e-8


def test_quadratic_is_exact_shift():
    omega = 1.3
    state = E.build_intermediate(E.quadratic(omega, 1.0))
    x = np.linspace(-4, 4, 9)
    assert_allclose(state.V_minus_W(x), omega, rtol=1e-12)
    assert_allclose(state.W(x), omega**2 * x**2 - omega, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name, kw", FIRST_ORDER + [("super", {})])
def test_state_records(name, kw):
    pot = E.named_potential(name, **kw)
    cond = E.check_eckmann_conditions(pot, x_max=4.0 if name == "super" else 10.0)
    state = E.build_intermediate(pot) if cond.ok else E.build_second_order(pot)
    assert state.order == (2 if name == "super" else 1)
    recs = state.records()
    assert recs and all(r.ok for r in recs)
    assert 2 * state.c_F_bound <= 1 / min(state.a, state.b) * (1 + 1e-12)


def test_second_order_super():
    state = E.build_second_order(E.super_exponential(0.5))
    assert all(r.ok for r in state.ratio_checks)
    assert {r.check for r in state.ratio_checks} >= {"g_squared_ratio", "g_prime_ratio"}
    x = np.linspace(1.5, 3.0, 4)
    alpha = 0.5
    assert_allclose(state.V_minus_W(x), alpha - alpha**2 * x**2, rtol=1e-9)


def test_second_order_quartic_corrections_small():
    state = E.build_second_order(E.power(2, 1.0, 1.0), x_max=10.0)
    x = np.array([5.0, 10.0])
    assert_allclose(state._g(x), 1 / x, rtol=1e-9)
    assert np.all(np.abs(state._g(x)) ** 2 / state.F0(x) < 0.05)


def test_larger_x0_increases_a_and_b():
    states = [E.build_intermediate(E.power(2, 1.0, x0), x0) for x0 in (1.0, 1.5, 2.0)]
    assert np.all(np.diff([s.a for s in states]) > 0)
    assert np.all(np.diff([s.b for s in states]) > 0)


def test_widening_test():
    stable = E.widening_test(lambda x: -x * x, 6.0)
    assert stable.stable and not stable.diverging
    growing = E.widening_test(lambda x: 0.1 * x * x, 6.0)
    assert growing.diverging and not growing.stable
    assert_allclose(E.log_integral(lambda x: -x * x, -8, 8), 0.5 * math.log(math.pi), rtol=1e-10)


@pytest.mark.parametrize("name, kw", FIRST_ORDER)
def test_first_order_pipeline(name, kw):
    rep = E.run_example(name, **kw)
    assert rep.state.order == 1
    assert rep.ok, [r for r in rep.records if not r.ok]
    assert rep.gap >= math.exp(rep.log_gap_bound)


def test_super_pipeline():
    rep = E.run_example("super")
    assert rep.state.order == 2 and rep.ok


def test_quartic_with_extra_perturbation():
    state = E.build_intermediate(E.power(2, 1.0, 1.0))
    rep = E.perturbation_step(state, V1=lambda x: x * x)
    assert rep.ok
    assert_allclose(rep.lambda_direct, 1.39235, atol=2e-5)


def test_kappa_above_threshold_diverges():
    with pytest.raises(TailDivergence):
        E.run_example("exponential", kappa=3.0)


def test_nu_validation():
    state = E.build_intermediate(E.power(2, 1.0, 1.0))
    with pytest.raises(DomainError):
        E.perturbation_step(state, nu=0.5 * state.c_F_bound)


def test_malrieu_roberto_beta_one():
    rep = E.malrieu_roberto(1.0)
    assert rep.ok
    checks = {r.check for r in rep.records}
    assert {"U_nonnegative", "U_upper", "nonconvexity_witness", "consecutive_psi", "consecutive_lambda"} <= checks
    assert rep.witness_value < -1 and rep.witness_x > 10


def test_malrieu_roberto_beta_zero():
    rep = E.malrieu_roberto(0.0)
    assert rep.ok
    assert_allclose(rep.M, 1.0, atol=1e-9)


def test_malrieu_roberto_stated_reading():
    assert E.malrieu_roberto(1.0, reading="stated").ok
    with pytest.raises(DomainError):
        E.malrieu_roberto(2.0)


def test_toy_model():
    one = E.toy_model_constants(1)
    many = E.toy_model_constants(1000)
    assert one.ok and many.ok
    assert one.c_F_product == many.c_F_product == one.c_F_bound
    assert one.log_c_factor == many.log_c_factor
    assert math.isfinite(one.log_c_product)
    assert one.tail.stable
    direct = E.perturbation_step(E.build_intermediate(E.power(2, 1.0, 1.0)))
    assert_allclose(one.pipeline.gap, direct.gap, rtol=1e-12)
