"""Weighted measures on a uniform 1-D grid and their Schrödinger operators.

A measure ``dm = rho^2 dx`` is sampled at the nodes of a uniform grid. The
Dirichlet form ``int |f'|^2 dm`` is discretized with flux densities at the
midpoints (geometric mean of the adjacent ``rho^2``), which makes the operator
``-rho^{-2} (b f')'`` symmetric in the weighted inner product and turns the
ground state transformation into an exact identity between matrices.

Boundary nodes carry homogeneous Dirichlet conditions: every eigenfunction
vanishes there, and the two boundary rows of an operator are never used.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import linalg, special

from hypercon.errors import ConvergenceFailure, DegenerateMeasure, DomainError, NonFinitePotential

ArrayLike = Union[np.ndarray, float]


@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    n: int

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError("need x_min < x_max")
        if self.n < 3:
            raise DomainError("need at least 3 nodes")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n - 1)

    @functools.cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.linspace(self.x_min, self.x_max, self.n)
        nodes.setflags(write=False)
        return nodes

    @classmethod
    def symmetric(cls, half_width: float, n: int) -> "Grid":
        return cls(-half_width, half_width, n)


@dataclass(frozen=True)
class WeightedGridMeasure:
    grid: Grid
    density: np.ndarray
    weights: np.ndarray
    total_mass: float
    probability: bool = False

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def interior(self) -> slice:
        return slice(1, self.grid.n - 1)

    def restrict_weights(self, mask: np.ndarray) -> np.ndarray:
        return np.where(mask, self.weights, 0.0)

    def tail_mass(self, margin: float = 1.0) -> float:
        """Mass outside ``[x_min + margin, x_max - margin]``; a truncation diagnostic."""
        x = self.nodes
        outside = (x < self.grid.x_min + margin) | (x > self.grid.x_max - margin)
        return float(self.weights[outside].sum() / self.total_mass)


def _trapezoid_factors(n: int) -> np.ndarray:
    factors = np.ones(n)
    factors[0] = factors[-1] = 0.5
    return factors


def build_measure(
    grid: Grid,
    density: Union[Callable[[np.ndarray], np.ndarray], np.ndarray],
    normalize: bool = True,
) -> WeightedGridMeasure:
    """Sample ``rho^2`` at the nodes; trapezoid weights ``rho^2 h``, halved at the ends."""
    values = density(grid.nodes) if callable(density) else np.asarray(density, dtype=float)
    values = np.broadcast_to(np.asarray(values, dtype=float), grid.nodes.shape).copy()
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise DegenerateMeasure("density must be finite and nonnegative")
    weights = values * grid.h * _trapezoid_factors(grid.n)
    total = float(weights.sum())
    if not total > 0:
        raise DegenerateMeasure("all sampled densities vanish")
    if normalize:
        values = values / total
        weights = weights / total
        total = 1.0
    values.setflags(write=False)
    weights.setflags(write=False)
    return WeightedGridMeasure(grid, values, weights, total, probability=normalize)


def build_log_measure(grid: Grid, log_density: np.ndarray, normalize: bool = True) -> WeightedGridMeasure:
    """Same as :func:`build_measure` but from ``log rho^2``, shifted to avoid underflow."""
    log_density = np.asarray(log_density, dtype=float)
    finite = np.isfinite(log_density)
    shift = log_density[finite].max() if finite.any() else 0.0
    return build_measure(grid, np.where(finite, np.exp(log_density - shift), 0.0), normalize=normalize)


def lebesgue(grid: Grid) -> WeightedGridMeasure:
    return build_measure(grid, np.ones(grid.n), normalize=False)


def gaussian_measure(grid: Grid, omega: float = 1.0) -> WeightedGridMeasure:
    """``(omega/pi)^{1/2} e^{-omega x^2} dx``; LSI coefficient ``c = 1/(2 omega)``."""
    x = grid.nodes
    return build_measure(grid, np.sqrt(omega / np.pi) * np.exp(-omega * x * x), normalize=True)


# ---------------------------------------------------------------------------
# Operators


@dataclass(frozen=True)
class TridiagonalOperator:
    """``H = -rho^{-2} d/dx (b d/dx) + V`` on the grid.

    ``diag`` and ``offdiag`` are the entries of the symmetric (Jacobi) form
    ``D^{1/2} A D^{-1/2}`` with ``D = diag(rho^2)``; only interior rows are
    meaningful. ``flux`` holds the midpoint densities ``b_{i+1/2}``.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    measure: WeightedGridMeasure
    flux: np.ndarray
    potential: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.measure.grid.n

    def apply(self, f: np.ndarray) -> np.ndarray:
        """``(H f)_i`` at interior nodes using the neighbouring values of f; zero on the boundary."""
        f = np.asarray(f, dtype=float)
        h2 = self.measure.grid.h ** 2
        rho2 = self.measure.density
        out = np.zeros_like(f)
        b_right = self.flux[1:]
        b_left = self.flux[:-1]
        inner = slice(1, self.n - 1)
        flux_div = b_right * (f[2:] - f[inner]) - b_left * (f[inner] - f[:-2])
        out[inner] = -flux_div / (h2 * rho2[inner]) + self.potential[inner] * f[inner]
        return out

    def quadratic_form(self, f: np.ndarray) -> float:
        """``<H f, f>_m`` for f vanishing on the boundary."""
        return dirichlet_energy(self.measure, f) + float(np.sum(self.potential * f * f * self.measure.weights))

    def jacobi(self) -> tuple[np.ndarray, np.ndarray]:
        """Interior symmetric tridiagonal entries."""
        return self.diag[1:-1], self.offdiag[1:-1]


def _flux(measure: WeightedGridMeasure) -> np.ndarray:
    rho2 = measure.density
    return np.sqrt(rho2[:-1] * rho2[1:])


def schrodinger_operator(measure: WeightedGridMeasure, V: Optional[ArrayLike] = None) -> TridiagonalOperator:
    """Assemble ``nabla^* nabla + V`` for the measure with Dirichlet closure."""
    n = measure.grid.n
    potential = np.zeros(n) if V is None else np.broadcast_to(np.asarray(V, dtype=float), (n,)).copy()
    inner = slice(1, n - 1)
    if not np.all(np.isfinite(potential[inner])):
        raise NonFinitePotential("potential must be finite at interior nodes")
    potential[~np.isfinite(potential)] = 0.0
    rho2 = measure.density
    if np.any(rho2[inner] <= 0):
        raise DegenerateMeasure("density vanishes at an interior node")
    h2 = measure.grid.h ** 2
    flux = _flux(measure)
    diag = np.zeros(n)
    diag[inner] = (flux[1:] + flux[:-1]) / (h2 * rho2[inner]) + potential[inner]
    rho = np.sqrt(rho2)
    offdiag = np.zeros(n - 1)
    both = (rho[:-1] > 0) & (rho[1:] > 0)
    offdiag[both] = -flux[both] / (h2 * rho[:-1][both] * rho[1:][both])
    for arr in (diag, offdiag, flux, potential):
        arr.setflags(write=False)
    return TridiagonalOperator(diag, offdiag, measure, flux, potential)


def dirichlet_operator(measure: WeightedGridMeasure) -> TridiagonalOperator:
    return schrodinger_operator(measure, None)


def dirichlet_energy(measure: WeightedGridMeasure, f: np.ndarray) -> float:
    """``sum b_{i+1/2} ((f_{i+1} - f_i)/h)^2 h``."""
    h = measure.grid.h
    df = np.diff(np.asarray(f, dtype=float))
    return float(np.sum(_flux(measure) * df * df) / h)


# ---------------------------------------------------------------------------
# Eigensolver


@dataclass(frozen=True)
class GroundState:
    lambda0: float
    gap: float
    psi: np.ndarray
    lambda1: float
    measure: WeightedGridMeasure = field(repr=False)
    eigenvalue_bisection: float = float("nan")

    @property
    def nodes(self) -> np.ndarray:
        return self.measure.nodes


def ground_state(op: TridiagonalOperator, count: int = 2) -> GroundState:
    """Two lowest eigenpairs by Sturm bisection (LAPACK stebz) and inverse iteration (stein).

    The reported ``lambda0`` is the Rayleigh quotient of the computed vector,
    which is accurate to the square of the eigenvector error.
    """
    d, e = op.jacobi()
    try:
        values, vectors = linalg.eigh_tridiagonal(
            d, e, select="i", select_range=(0, count - 1), lapack_driver="stebz"
        )
    except (linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"tridiagonal eigensolver failed: {exc}") from exc
    phi = vectors[:, 0]
    if not np.all(np.isfinite(phi)):
        raise ConvergenceFailure("inverse iteration produced non-finite entries")
    if phi.sum() < 0:
        phi = -phi
    rayleigh = float(phi @ (d * phi) + 2.0 * phi[:-1] @ (e * phi[1:])) / float(phi @ phi)
    residual = np.abs(d * phi + np.r_[e * phi[1:], 0.0] + np.r_[0.0, e * phi[:-1]] - rayleigh * phi).max()
    scale = max(np.abs(d).max(), 1.0)
    if residual > 1e-8 * scale * np.abs(phi).max():
        raise ConvergenceFailure(f"eigenvector residual {residual:.3e} too large")

    measure = op.measure
    rho = np.sqrt(measure.density[1:-1])
    psi = np.zeros(measure.grid.n)
    psi[1:-1] = phi / rho
    psi /= np.sqrt(np.sum(psi * psi * measure.weights) / measure.total_mass)
    lambda1 = float(values[1]) if count > 1 else float("nan")
    return GroundState(
        lambda0=rayleigh,
        gap=lambda1 - rayleigh,
        psi=psi,
        lambda1=lambda1,
        measure=measure,
        eigenvalue_bisection=float(values[0]),
    )


def solve(measure: WeightedGridMeasure, V: Optional[ArrayLike] = None) -> GroundState:
    return ground_state(schrodinger_operator(measure, V))


def richardson(coarse: float, fine: float, order: float = 2.0) -> float:
    """Extrapolate two values on grids with spacing ratio 2."""
    factor = 2.0**order
    return (factor * fine - coarse) / (factor - 1.0)


def observed_order(coarse: float, medium: float, fine: float) -> float:
    """Convergence order from three values on spacings h, h/2, h/4."""
    return float(np.log2(abs(coarse - medium) / abs(medium - fine)))


# ---------------------------------------------------------------------------
# Quadrature


def integrate(measure: WeightedGridMeasure, f: ArrayLike) -> float:
    return float(np.sum(np.broadcast_to(f, measure.weights.shape) * measure.weights))


def lp_norm(measure: WeightedGridMeasure, f: ArrayLike, p: float, mask: Optional[np.ndarray] = None) -> float:
    """``(sum |f|^p w)^{1/p}``; for p < 1 this is not a norm but is still well defined."""
    if not p > 0:
        raise DomainError("p must be positive")
    absf = np.abs(np.broadcast_to(np.asarray(f, dtype=float), measure.weights.shape))
    weights = measure.weights if mask is None else np.where(mask, measure.weights, 0.0)
    if np.isinf(p):
        return float(absf[weights > 0].max())
    # log-sum-exp keeps large p away from overflow.
    with np.errstate(divide="ignore"):
        log_terms = p * np.log(absf) + np.log(weights)
    return float(np.exp(special.logsumexp(log_terms) / p))


def log_exp_norm(measure: WeightedGridMeasure, g: ArrayLike, p: float, mask: Optional[np.ndarray] = None) -> float:
    """``log ||e^g||_p`` computed in log space."""
    if not p > 0:
        raise DomainError("p must be positive")
    g = np.broadcast_to(np.asarray(g, dtype=float), measure.weights.shape)
    weights = measure.weights if mask is None else np.where(mask, measure.weights, 0.0)
    if np.isinf(p):
        return float(g[weights > 0].max())
    with np.errstate(divide="ignore"):
        return float(special.logsumexp(p * g + np.log(weights)) / p)


def entropy(measure: WeightedGridMeasure, f: ArrayLike) -> float:
    """``int f log f dm - (int f dm) log(int f dm)`` with ``0 log 0 = 0``."""
    f = np.broadcast_to(np.asarray(f, dtype=float), measure.weights.shape)
    if np.any(f < 0):
        raise DomainError("entropy needs f >= 0")
    mean = integrate(measure, f)
    if mean == 0:
        return 0.0
    flogf = np.where(f > 0, f * np.log(np.where(f > 0, f, 1.0)), 0.0)
    return integrate(measure, flogf) - mean * np.log(mean)


def gradient(measure: WeightedGridMeasure, f: np.ndarray) -> np.ndarray:
    """Centered differences inside, one-sided at the two ends."""
    return np.gradient(np.asarray(f, dtype=float), measure.grid.h)


# ---------------------------------------------------------------------------
# Named forms and tabulated input


def _harmonic(x, omega: float = 1.0):
    return omega * omega * x * x


def _quartic(x, lam: float = 1.0):
    return lam * x**4


def _expgrowth(x, c: float = 1.0):
    return np.exp(2.0 * c * np.abs(x))


def _polynomial(x, coeffs=(0.0, 0.0, 1.0)):
    """``sum_k coeffs[k] x^k`` (ascending powers)."""
    return np.polynomial.polynomial.polyval(x, np.asarray(coeffs, dtype=float))


NAMED_POTENTIALS: dict[str, Callable[..., np.ndarray]] = {
    "zero": lambda x: np.zeros_like(x),
    "harmonic": _harmonic,
    "quartic": _quartic,
    "expgrowth": _expgrowth,
    "polynomial": _polynomial,
}

NAMED_DENSITIES: dict[str, Callable[..., np.ndarray]] = {
    "lebesgue": lambda x: np.ones_like(x),
    "gaussian": lambda x, omega=1.0: np.sqrt(omega / np.pi) * np.exp(-omega * x * x),
}


def named_potential(name: str, x: np.ndarray, **kwargs) -> np.ndarray:
    """Sample a built-in potential (zero, harmonic, quartic, expgrowth, polynomial) at ``x``."""
    try:
        fn = NAMED_POTENTIALS[name]
    except KeyError:
        raise DomainError(f"unknown potential {name!r}; choose from {sorted(NAMED_POTENTIALS)}") from None
    return np.asarray(fn(np.asarray(x, dtype=float), **kwargs), dtype=float)


def named_measure(name: str, grid: Grid, normalize: Optional[bool] = None, **kwargs) -> WeightedGridMeasure:
    """Built-in densities; Gaussians are normalized by default, Lebesgue is not."""
    try:
        fn = NAMED_DENSITIES[name]
    except KeyError:
        raise DomainError(f"unknown density {name!r}; choose from {sorted(NAMED_DENSITIES)}") from None
    if normalize is None:
        normalize = name != "lebesgue"
    return build_measure(grid, fn(grid.nodes, **kwargs), normalize=normalize)


def load_tabulated(path: str) -> tuple[np.ndarray, np.ndarray]:
    """Read ``x,value`` rows (a header line is allowed); x must be strictly increasing."""
    try:
        data = np.genfromtxt(path, delimiter=",", dtype=float, names=None, comments="#")
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from None
    data = np.atleast_2d(data)
    data = data[~np.isnan(data).any(axis=1)] if data.shape[1] == 2 else data
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 2:
        raise DomainError(f"{path} must hold at least two x,value rows")
    x, v = data[:, 0], data[:, 1]
    if np.any(np.diff(x) <= 0):
        raise DomainError(f"{path}: x must be strictly increasing")
    return x, v


def tabulated_on_grid(path: str, grid: Grid) -> np.ndarray:
    """Linear interpolation of a tabulated function at the grid nodes; no extrapolation."""
    x, v = load_tabulated(path)
    if grid.x_min < x[0] - 1e-12 or grid.x_max > x[-1] + 1e-12:
        raise DomainError(f"{path} covers [{x[0]}, {x[-1]}], which does not contain the grid")
    return np.interp(grid.nodes, x, v)
