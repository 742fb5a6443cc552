import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hypercon.errors import DegenerateMeasure, DomainError, NonFinitePotential
from hypercon.grid import (
    Grid,
    build_measure,
    dirichlet_energy,
    dirichlet_operator,
    entropy,
    gaussian_measure,
    ground_state,
    integrate,
    lebesgue,
    load_tabulated,
    lp_norm,
    named_measure,
    named_potential,
    observed_order,
    richardson,
    schrodinger_operator,
    solve,
    tabulated_on_grid,
)


def oscillator(n, half_width=10.0):
    grid = Grid.symmetric(half_width, n)
    return solve(lebesgue(grid), grid.nodes**2)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(1.0, 0.0, 10)
    with pytest.raises(DomainError):
        Grid(0.0, 1.0, 2)
    g = Grid(0.0, 1.0, 11)
    assert_allclose(g.h, 0.1)
    assert np.all(np.diff(g.nodes) > 0)


@pytest.mark.parametrize("omega", [1.0, 2.0])
def test_gaussian_mass(omega):
    grid = Grid.symmetric(8.0, 1601)
    raw = build_measure(grid, lambda x: math.sqrt(omega / math.pi) * np.exp(-omega * x * x), normalize=False)
    assert abs(raw.total_mass - 1.0) < 1e-9
    assert abs(gaussian_measure(grid, omega).total_mass - 1.0) < 1e-12


def test_constant_density_uniform_weights():
    m = build_measure(Grid(0.0, 1.0, 101), np.ones(101))
    assert_allclose(m.weights[1:-1], m.weights[1], rtol=1e-14)
    assert_allclose(m.weights.sum(), 1.0, rtol=1e-14)


def test_degenerate_measure():
    with pytest.raises(DegenerateMeasure):
        build_measure(Grid(0.0, 1.0, 11), np.zeros(11))
    m = build_measure(Grid(0.0, 1.0, 11), np.r_[1.0, np.zeros(9), 1.0])
    with pytest.raises(DegenerateMeasure):
        dirichlet_operator(m)


def test_ou_operator_on_linear_function():
    grid = Grid.symmetric(8.0, 1601)
    m = gaussian_measure(grid)
    x = grid.nodes
    Af = dirichlet_operator(m).apply(x)
    inner = np.abs(x) < 6
    assert np.max(np.abs(Af[inner] - 2 * x[inner])) < 10 * grid.h**2 * 36
    const = dirichlet_operator(m).apply(np.ones_like(x))
    assert np.max(np.abs(const[1:-1])) < 1e-8


def test_operator_symmetry():
    rng = np.random.default_rng(1)
    grid = Grid.symmetric(6.0, 301)
    m = gaussian_measure(grid, 0.7)
    op = schrodinger_operator(m, np.cos(grid.nodes))
    for _ in range(10):
        f, g = rng.standard_normal((2, grid.n))
        f[[0, -1]] = g[[0, -1]] = 0.0
        lhs = integrate(m, op.apply(f) * g)
        rhs = integrate(m, f * op.apply(g))
        assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_quadratic_form_is_dirichlet_energy():
    grid = Grid.symmetric(5.0, 201)
    m = gaussian_measure(grid)
    f = np.sin(grid.nodes) * np.exp(-grid.nodes**2 / 10)
    f[[0, -1]] = 0.0
    op = dirichlet_operator(m)
    assert_allclose(integrate(m, op.apply(f) * f), dirichlet_energy(m, f), rtol=1e-11)
    assert dirichlet_energy(m, f) >= 0


def test_schrodinger_matches_textbook_laplacian():
    grid = Grid.symmetric(8.0, 401)
    x, h = grid.nodes, grid.h
    op = schrodinger_operator(lebesgue(grid), x**2)
    d, e = op.jacobi()
    assert_allclose(d, 2 / h**2 + x[1:-1] ** 2, rtol=1e-13)
    assert_allclose(e, -1 / h**2, rtol=1e-13)
    zero = schrodinger_operator(lebesgue(grid), None)
    assert_allclose(zero.diag, dirichlet_operator(lebesgue(grid)).diag)


def test_nonfinite_potential():
    grid = Grid.symmetric(1.0, 11)
    V = np.zeros(11)
    V[5] = np.inf
    with pytest.raises(NonFinitePotential):
        schrodinger_operator(lebesgue(grid), V)


def test_harmonic_oscillator():
    gs = oscillator(4001)
    # The three-point stencil leaves h^2/16 in lambda0; extrapolation removes it.
    assert abs(gs.lambda0 - 1.0) < 2e-6
    assert abs(richardson(oscillator(2001).lambda0, gs.lambda0) - 1.0) < 1e-6
    assert abs(gs.gap - 2.0) < 1e-5
    assert_allclose(np.sum(gs.psi**2 * gs.measure.weights) / gs.measure.total_mass, 1.0, rtol=1e-12)
    assert np.all(gs.psi[1:-1] > 0)


def test_richardson_order():
    values = [oscillator(n).lambda0 for n in (1001, 2001, 4001)]
    assert abs(observed_order(*values) - 2.0) < 0.2
    assert abs(richardson(values[1], values[2]) - 1.0) < abs(values[2] - 1.0)


def test_gaussian_kernel_ground_state():
    m = gaussian_measure(Grid.symmetric(8.0, 1601))
    gs = solve(m)
    assert abs(gs.lambda0) < 1e-10
    bulk = np.abs(m.nodes) < 4
    assert_allclose(gs.psi[bulk], 1.0, atol=1e-6)


def test_gaussian_quadratic_lambda0():
    m = gaussian_measure(Grid.symmetric(8.0, 4001))
    gs = solve(m, 3.0 * m.nodes**2)
    assert abs(gs.lambda0 - 1.0) < 1e-5


def test_rayleigh_quotient():
    grid = Grid.symmetric(8.0, 2001)
    m = gaussian_measure(grid)
    op = schrodinger_operator(m, grid.nodes**4 / 10)
    gs = ground_state(op)
    rq = op.quadratic_form(gs.psi) / integrate(m, gs.psi**2)
    assert abs(rq - gs.lambda0) < 1e-9


def test_entropy_examples():
    grid = Grid.symmetric(10.0, 4001)
    m = gaussian_measure(grid)
    assert abs(entropy(m, np.ones(grid.n))) < 1e-14
    assert_allclose(entropy(m, np.exp(2 * grid.nodes)), math.e, rtol=1e-6)
    with pytest.raises(DomainError):
        entropy(m, -np.ones(grid.n))


def test_entropy_homogeneity():
    grid = Grid.symmetric(5.0, 501)
    m = gaussian_measure(grid)
    f = 1 + np.sin(grid.nodes) ** 2
    for c in (0.3, 2.0, 17.0):
        lhs = entropy(m, c * f)
        rhs = c * entropy(m, f) + c * integrate(m, f) * math.log(c) - c * integrate(m, f) * math.log(c)
        assert abs(lhs - rhs) < 1e-10 * max(1, c)


def test_trapezoid_exact_for_linear():
    m = build_measure(Grid(0.0, 1.0, 7), np.ones(7), normalize=False)
    assert_allclose(integrate(m, 3 * m.nodes + 1), 2.5, rtol=1e-14)


def test_lp_norm():
    m = build_measure(Grid(0.0, 1.0, 11), np.ones(11))
    assert_allclose(lp_norm(m, 2.0 * np.ones(11), 0.5), 2.0, rtol=1e-14)
    assert lp_norm(m, m.nodes, np.inf) == 1.0
    with pytest.raises(DomainError):
        lp_norm(m, m.nodes, 0.0)


def test_named_forms():
    grid = Grid.symmetric(2.0, 5)
    assert_allclose(named_potential("harmonic", grid.nodes, omega=2.0), 4 * grid.nodes**2)
    assert_allclose(named_potential("polynomial", grid.nodes, coeffs=(1, 0, 2)), 1 + 2 * grid.nodes**2)
    assert_allclose(named_potential("expgrowth", grid.nodes, c=0.5), np.exp(np.abs(grid.nodes)))
    assert named_measure("lebesgue", grid).total_mass == pytest.approx(4.0)
    assert named_measure("gaussian", grid, omega=2.0).probability
    with pytest.raises(DomainError):
        named_potential("nope", grid.nodes)
    with pytest.raises(DomainError):
        named_measure("nope", grid)


def test_tabulated(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("x,value\n-3,9\n0,0\n3,9\n")
    x, v = load_tabulated(str(path))
    assert_allclose(x, [-3, 0, 3])
    on_grid = tabulated_on_grid(str(path), Grid.symmetric(3.0, 7))
    assert_allclose(on_grid, [9, 6, 3, 0, 3, 6, 9])
    with pytest.raises(DomainError):
        tabulated_on_grid(str(path), Grid.symmetric(4.0, 7))
    bad = tmp_path / "bad.csv"
    bad.write_text("1,0\n0,1\n")
    with pytest.raises(DomainError):
        load_tabulated(str(bad))
