"""The standard battery of solved instances.

Each instance is a base measure, a potential, LSI parameters for the base and,
where known, the exact ground state. Builders take the node count so that
refinement pairs for extrapolation share the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from hypercon.constants import LsiParams
from hypercon.errors import ConfigError, DomainError
from hypercon.grid import Grid, WeightedGridMeasure, build_log_measure, build_measure

DEFAULT_N = 4001


@dataclass(frozen=True)
class Instance:
    name: str
    measure: WeightedGridMeasure
    V: np.ndarray
    params: LsiParams
    lambda0_exact: Optional[float] = None
    psi_exact: Optional[np.ndarray] = None
    osc_V: Optional[float] = None

    @property
    def bounded(self) -> bool:
        return self.osc_V is not None

    @property
    def grid(self) -> Grid:
        return self.measure.grid


def smoothstep_sign(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """C² odd blend from -1 to 1 across [-1, 1] (quintic smoothstep) with two derivatives."""
    t = np.clip((x + 1.0) / 2.0, 0.0, 1.0)
    inside = np.abs(x) < 1.0
    s = t**3 * (10.0 - 15.0 * t + 6.0 * t * t)
    ds = np.where(inside, 30.0 * t * t * (1.0 - t) ** 2, 0.0)
    d2s = np.where(inside, 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t), 0.0)
    return 2.0 * s - 1.0, ds, 0.5 * d2s


# ---------------------------------------------------------------------------
# Gaussian base with a quadratic potential


def gaussian_density(omega: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: math.sqrt(omega / math.pi) * np.exp(-omega * x * x)


def gaussian_quadratic(
    omega: float = 1.0, a: float = 3.0, n: int = DEFAULT_N, half_width: float = 8.0, kappa: float = 0.2, nu: float = 2.0
) -> Instance:
    """``m_omega`` with ``V = a x^2``; ``psi = (alpha/omega)^{1/4} e^{(omega-alpha) x^2/2}``."""
    if omega + a <= 0 and omega * omega + a <= 0:
        raise DomainError("need omega^2 + a > 0")
    grid = Grid.symmetric(half_width, n)
    x = grid.nodes
    m = build_measure(grid, gaussian_density(omega))
    alpha = math.sqrt(omega * omega + a)
    psi = (alpha / omega) ** 0.25 * np.exp((omega - alpha) * x * x / 2.0)
    params = LsiParams(c=1.0 / (2.0 * omega), kappa=kappa, nu=nu)
    return Instance(f"gaussian_quadratic(omega={omega},a={a})", m, a * x * x, params, alpha - omega, psi)


# ---------------------------------------------------------------------------
# Bounded potential with unbounded psi and psi^{-1}


def example_bounded_unbounded_psi(x: np.ndarray, c: float = 0.5):
    """``F = -h(x) log(1 + x^2)`` with h the smooth sign, and its WKB potential on ``N(0, c)``.

    ``psi = e^{-F}`` behaves like ``(1+x^2)^{±1}`` on the two sides; V is bounded.
    Returns ``(F, V)``.
    """
    h, dh, d2h = smoothstep_sign(x)
    L = np.log1p(x * x)
    dL = 2.0 * x / (1.0 + x * x)
    d2L = 2.0 * (1.0 - x * x) / (1.0 + x * x) ** 2
    F = -h * L
    dF = -(dh * L + h * dL)
    d2F = -(d2h * L + 2.0 * dh * dL + h * d2L)
    # Under dm = e^{-x^2/(2c)} dx the Dirichlet form operator is -f'' + (x/c) f'.
    V = dF * dF - d2F + x * dF / c
    return F, V


def bounded_unbounded_psi(n: int = DEFAULT_N, half_width: float = 8.0, kappa: float = 1.0, nu: float = 2.0) -> Instance:
    c = 0.5
    grid = Grid.symmetric(half_width, n)
    x = grid.nodes
    m = build_measure(grid, gaussian_density(1.0 / (2.0 * c)))
    F, V = example_bounded_unbounded_psi(x, c)
    psi = np.exp(-F)
    psi /= math.sqrt(np.sum(psi * psi * m.weights))
    # The oscillation is taken from a dense sample of the whole line.
    xs = np.linspace(-60.0, 60.0, 240001)
    _, Vs = example_bounded_unbounded_psi(xs, c)
    osc = float(Vs.max() - Vs.min())
    return Instance("bounded_unbounded_psi", m, V, LsiParams(c, kappa, nu), 0.0, psi, osc)


# ---------------------------------------------------------------------------
# Quartic potential through its intermediate state


def quartic_intermediate(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Intermediate state for ``V = x^4`` with matching point 1: ``(F, V - W)``."""
    ax = np.abs(x)
    F = np.where(ax < 1.0, x * x / 2.0, (ax**3 - 1.0) / 3.0 + 0.5)
    VmW = np.where(ax < 1.0, 1.0 - x * x + x**4, 2.0 * ax)
    return F, VmW


def eckmann_quartic(n: int = DEFAULT_N, half_width: float = 5.0, kappa: float = 0.25, nu: float = 2.0) -> Instance:
    """``m^F = e^{-2F} dx`` with ``V - W``; the ground state energy is that of x^4 minus W's (zero)."""
    grid = Grid.symmetric(half_width, n)
    F, VmW = quartic_intermediate(grid.nodes)
    m = build_log_measure(grid, -2.0 * F)
    # 2 c_F <= 1/min(a, b) with a = 2, b = 1.
    return Instance("eckmann_quartic", m, VmW, LsiParams(0.5, kappa, nu))


# ---------------------------------------------------------------------------
# Malrieu-Roberto


def malrieu_roberto_F(x: np.ndarray, beta: float):
    F = x * x + beta * x * np.sin(x)
    dF = 2.0 * x + beta * x * np.cos(x) + beta * np.sin(x)
    d2F = -beta * x * np.sin(x) + 2.0 + 2.0 * beta * np.cos(x)
    return F, dF, d2F


MR_READINGS = ("consistent", "stated")


def malrieu_roberto_c(beta: float, reading: str = "consistent") -> float:
    """Sobolev coefficient of the Gaussian base ``e^{-x^2/(2c)}``.

    ``consistent``: the base is the ground state measure of ``x^2 (2-|beta|)^2``,
    so ``c = 1/(2(2-|beta|))``. ``stated``: ``c^{-1} = 2 - |beta|``.
    """
    if abs(beta) >= 2:
        raise DomainError("need |beta| < 2")
    if reading == "consistent":
        return 1.0 / (2.0 * (2.0 - abs(beta)))
    if reading == "stated":
        return 1.0 / (2.0 - abs(beta))
    raise ConfigError(f"reading must be one of {MR_READINGS}")


def malrieu_roberto_split(x: np.ndarray, beta: float, reading: str = "consistent") -> tuple[np.ndarray, np.ndarray, float]:
    """``(V_0, V_1, c)`` with ``V_F = V_0 + V_1`` relative to Lebesgue measure.

    ``V_0 = x^2/(4c^2)`` has ground state measure ``e^{-x^2/(2c)}`` and ground
    energy ``1/(2c)``; V_1 is the remainder.
    """
    c = malrieu_roberto_c(beta, reading)
    _, dF, d2F = malrieu_roberto_F(x, beta)
    VF = dF * dF - d2F
    V0 = x * x / (4.0 * c * c)
    return V0, VF - V0, c


def malrieu_roberto(
    beta: float = 1.0,
    n: int = DEFAULT_N,
    half_width: float = 8.0,
    kappa: float = 0.05,
    nu: float = 2.0,
    reading: str = "consistent",
) -> Instance:
    grid = Grid.symmetric(half_width, n)
    x = grid.nodes
    _, V1, c = malrieu_roberto_split(x, beta, reading)
    m = build_log_measure(grid, -x * x / (2.0 * c))
    F, _, _ = malrieu_roberto_F(x, beta)
    psi = np.exp(-F + x * x / (4.0 * c))
    psi /= math.sqrt(np.sum(psi * psi * m.weights))
    return Instance(f"malrieu_roberto(beta={beta})", m, V1, LsiParams(c, kappa, nu), -1.0 / (2.0 * c), psi)


# ---------------------------------------------------------------------------
# Small bounded perturbation for the Wang criterion


def wang_bounded(amplitude: float = 0.05, n: int = 2001, half_width: float = 8.0) -> Instance:
    """``V = amplitude cos(x)`` on ``N(0, 1/2)``; ``Osc(V) = 2 amplitude``."""
    grid = Grid.symmetric(half_width, n)
    x = grid.nodes
    m = build_measure(grid, gaussian_density(1.0))
    return Instance(f"wang_bounded(amplitude={amplitude})", m, amplitude * np.cos(x), LsiParams(0.5, 1.0, 2.0), osc_V=2.0 * amplitude)


BUILDERS: dict[str, Callable[..., Instance]] = {
    "gaussian_quadratic": gaussian_quadratic,
    "bounded_unbounded_psi": bounded_unbounded_psi,
    "eckmann_quartic": eckmann_quartic,
    "malrieu_roberto": malrieu_roberto,
    "wang_bounded": wang_bounded,
}

BATTERY = ("gaussian_quadratic", "bounded_unbounded_psi", "eckmann_quartic", "malrieu_roberto")


def build(name: str, **kwargs) -> Instance:
    try:
        builder = BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown instance {name!r}; choose from {sorted(BUILDERS)}") from None
    return builder(**kwargs)


def battery(n: int = DEFAULT_N) -> list[Instance]:
    return [BUILDERS[name](n=n) for name in BATTERY]
