"""Eckmann-type intermediate states, the perturbation step built on them, the
Malrieu-Roberto split, and the toy-model constant assembly.

An intermediate state is an explicit ``e^{-F}`` with F uniformly convex away
from the matching point, whose WKB potential ``W = -F'' + F'^2`` is close to
V. The remainder ``V - W`` is then treated as a perturbation of ``m^F``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, roots_legendre

from hypercon import constants as K
from hypercon import groundstate as G
from hypercon import instances as I
from hypercon.constants import LsiParams
from hypercon.errors import ConditionFailed, ConfigError, DomainError, QuadratureError, TailDivergence
from hypercon.grid import Grid, build_log_measure, lebesgue, lp_norm, solve
from hypercon.records import CheckRecord, all_ok, at_most, log_at_most, within

# Finite-domain stand-in for o(F_0): ratio at the probe edge must be below this.
RATIO_THRESHOLD = 0.05
# Widening tests: stable if the log-integral moves less than this from L to 1.25 L.
STABLE_LOG_CHANGE = 0.01


# ---------------------------------------------------------------------------
# Potential library


@dataclass(frozen=True)
class Potential:
    """A potential with two derivatives; ``even`` selects the symmetric construction."""

    name: str
    V: Callable[[np.ndarray], np.ndarray]
    dV: Callable[[np.ndarray], np.ndarray]
    d2V: Optional[Callable[[np.ndarray], np.ndarray]] = None
    even: bool = True
    x0: float = 1.0
    params: dict = field(default_factory=dict)

    def sqrt_derivative(self, x):
        """``(d/dx) sqrt V = V'/(2 sqrt V)``."""
        return self.dV(x) / (2.0 * np.sqrt(self.V(x)))

    def log_derivative(self, x):
        return self.dV(x) / self.V(x)

    def g(self, x):
        """Second order WKB correction ``(1/4)(log V)'``."""
        return 0.25 * self.dV(x) / self.V(x)

    def dg(self, x):
        if self.d2V is None:
            raise DomainError(f"{self.name} has no second derivative")
        V, dV = self.V(x), self.dV(x)
        return 0.25 * (self.d2V(x) / V - (dV / V) ** 2)


def power(r: float = 2.0, lam: float = 1.0, x0: float = 1.0) -> Potential:
    """``lam |x|^{2r}``, r >= 1."""
    if r < 1 or lam <= 0:
        raise DomainError("need r >= 1 and lambda > 0")
    return Potential(
        f"power(r={r},lambda={lam})",
        lambda x: lam * np.abs(x) ** (2 * r),
        lambda x: 2 * r * lam * np.sign(x) * np.abs(x) ** (2 * r - 1),
        lambda x: 2 * r * (2 * r - 1) * lam * np.abs(x) ** (2 * r - 2),
        x0=x0,
        params={"r": r, "lambda": lam},
    )


def polynomial(coeffs: Sequence[float] = (2.0, -2.0, 1.0), x0: float = 1.5) -> Potential:
    """Even polynomial ``sum_j a_j x^{2j}`` with positive leading coefficient."""
    coeffs = tuple(float(a) for a in coeffs)
    if len(coeffs) < 2 or coeffs[-1] <= 0:
        raise DomainError("need at least degree 2 and a positive leading coefficient")
    full = np.zeros(2 * len(coeffs) - 1)
    full[::2] = coeffs
    P = np.polynomial.Polynomial(full)
    dP, d2P = P.deriv(), P.deriv(2)
    return Potential(f"polynomial({','.join(map(str, coeffs))})", P, dP, d2P, x0=x0, params={"coeffs": list(coeffs)})


def slow_growth(b: float = 1.0, x0: float = 1.0) -> Potential:
    """``x^2 log(3+|x|)^{2b}``."""
    if b <= 0:
        raise DomainError("need b > 0")

    def V(x):
        return x * x * np.log(3.0 + np.abs(x)) ** (2 * b)

    def dV(x):
        ax = np.abs(x)
        L = np.log(3.0 + ax)
        return 2 * x * L ** (2 * b) + x * x * 2 * b * L ** (2 * b - 1) * np.sign(x) / (3.0 + ax)

    def d2V(x):
        ax = np.abs(x)
        L = np.log(3.0 + ax)
        u = 1.0 / (3.0 + ax)
        t1 = 2 * L ** (2 * b)
        t2 = 8 * b * ax * L ** (2 * b - 1) * u
        t3 = ax * ax * 2 * b * ((2 * b - 1) * L ** (2 * b - 2) * u * u - L ** (2 * b - 1) * u * u)
        return t1 + t2 + t3

    return Potential(f"slow_growth(b={b})", V, dV, d2V, x0=x0, params={"b": b})


def exponential(c: float = 1.0, x0: float = 1.5) -> Potential:
    """``e^{2c|x|}`` for ``|x| >= 1`` with an even cubic blend ``A + B u^2 + C u^3`` inside.

    The blend matches value, slope and curvature at ``|x| = 1``.
    """
    if c <= 0:
        raise DomainError("need c > 0")
    E = math.exp(2 * c)
    A = E * (1 - 4 * c / 3 + 2 * c * c / 3)
    B = 2 * c * (1 - c) * E
    C = (4 * c * c - 2 * c) * E / 3
    u = np.linspace(0.0, 1.0, 101)
    if np.any(A + B * u * u + C * u**3 <= 0):
        raise DomainError("the blend is not positive for this rate")

    def V(x):
        u = np.abs(x)
        return np.where(u >= 1, np.exp(2 * c * u), A + B * u * u + C * u**3)

    def dV(x):
        u = np.abs(x)
        return np.sign(x) * np.where(u >= 1, 2 * c * np.exp(2 * c * u), 2 * B * u + 3 * C * u * u)

    def d2V(x):
        u = np.abs(x)
        return np.where(u >= 1, 4 * c * c * np.exp(2 * c * u), 2 * B + 6 * C * u)

    if not x0 > 1:
        raise DomainError("the exponential example needs x0 > 1")
    return Potential(f"exponential(c={c})", V, dV, d2V, x0=x0, params={"c": c, "blend": [A, B, C]})


def super_exponential(alpha: float = 0.5, x0: float = 1.0) -> Potential:
    """``e^{2 alpha x^2}``; its log-derivative is unbounded."""
    if alpha <= 0:
        raise DomainError("need alpha > 0")
    return Potential(
        f"super(alpha={alpha})",
        lambda x: np.exp(2 * alpha * x * x),
        lambda x: 4 * alpha * x * np.exp(2 * alpha * x * x),
        lambda x: (4 * alpha + 16 * alpha * alpha * x * x) * np.exp(2 * alpha * x * x),
        x0=x0,
        params={"alpha": alpha},
    )


def quadratic(omega: float = 1.0, x0: float = 1.0) -> Potential:
    return Potential(
        f"quadratic(omega={omega})",
        lambda x: omega * omega * x * x,
        lambda x: 2 * omega * omega * x,
        lambda x: 2 * omega * omega * np.ones_like(np.asarray(x, dtype=float)),
        x0=x0,
        params={"omega": omega},
    )


LIBRARY: dict[str, Callable[..., Potential]] = {
    "power": power,
    "polynomial": polynomial,
    "slow_growth": slow_growth,
    "exponential": exponential,
    "super": super_exponential,
    "quadratic": quadratic,
}


def named_potential(name: str, **kwargs) -> Potential:
    try:
        return LIBRARY[name](**kwargs)
    except KeyError:
        raise ConfigError(f"unknown potential {name!r}; choose from {sorted(LIBRARY)}") from None


# ---------------------------------------------------------------------------
# Conditions


@dataclass(frozen=True)
class ConditionReport:
    a: float
    k: float
    k_bounded: bool
    ok: bool
    x0: float
    x_max: float
    detail: dict = field(default_factory=dict)


def _probe(x0: float, x_max: float, n: int, sign_split: bool) -> list[np.ndarray]:
    if not x_max > x0 > 0:
        raise DomainError("need 0 < x0 < x_max")
    right = np.linspace(x0, x_max, n)
    return [right, -right] if sign_split else [right]


def check_eckmann_conditions(
    pot: Potential, x0: Optional[float] = None, x_max: float = 10.0, n: int = 2001, sign_split: Optional[bool] = None
) -> ConditionReport:
    """``a = min (sgn x)(sqrt V)'`` and ``k = max (sgn x) V'/V`` beyond x0.

    A probe grid cannot see k become infinite; k counts as unbounded when
    ``V'/V`` at the probe edge exceeds its value at the midpoint by 5%.
    """
    x0 = pot.x0 if x0 is None else x0
    sign_split = (not pot.even) if sign_split is None else sign_split
    a_vals, k_vals, k_bounded = [], [], True
    for side in _probe(x0, x_max, n, sign_split):
        sgn = np.sign(side[0])
        V = pot.V(side)
        if np.any(V <= 0):
            bad = float(side[np.argmax(V <= 0)])
            raise ConditionFailed(f"V is not positive at x = {bad}", where=bad, failed=("positivity",))
        slope = sgn * pot.sqrt_derivative(side)
        j = int(np.argmin(slope))
        if slope[j] <= 0:
            raise ConditionFailed(
                f"Eckmann slope (sqrt V)' = {slope[j]:.4g} <= 0 at x = {side[j]:.6g}", where=float(side[j]), failed=("slope",)
            )
        a_vals.append(float(slope[j]))
        logd = sgn * pot.log_derivative(side)
        k_vals.append(float(logd.max()))
        mid = logd[len(logd) // 2]
        if logd[-1] > 1.05 * mid and logd[-1] > 0:
            k_bounded = False
    a, k = min(a_vals), max(k_vals)
    return ConditionReport(a, k, k_bounded, bool(a > 0 and k_bounded), x0, x_max, {"sign_split": sign_split})


def find_x0(pot: Potential, x_max: float = 10.0, n: int = 4001, margin: float = 0.1) -> float:
    """Smallest probe point beyond which V > 0 and (sqrt V)' > 0, enlarged by ``margin``."""
    x = np.linspace(x_max / n, x_max, n)
    sides = [x] if pot.even else [x, -x]
    start = 0.0
    for side in sides:
        sgn = np.sign(side[0])
        with np.errstate(all="ignore"):
            good = (pot.V(side) > 0) & (sgn * pot.sqrt_derivative(side) > 0)
        bad = np.nonzero(~good)[0]
        first = 0 if bad.size == 0 else bad[-1] + 1
        if first >= n:
            raise ConditionFailed("no x0 with a positive Eckmann slope on the probe range", failed=("slope",))
        start = max(start, float(x[first]))
    return start * (1.0 + margin)


# ---------------------------------------------------------------------------
# Intermediate states


class _TailIntegral:
    """Cumulative Gauss-Legendre quadrature of a tail integrand from x0 outward.

    Each cell is integrated with 8 and 16 nodes; a disagreement beyond ``tol``
    (relative to the accumulated value) raises QuadratureError.
    """

    def __init__(self, integrand: Callable, x0: float, tol: float = 1e-10):
        self.f, self.x0, self.tol = integrand, x0, tol
        self.n8 = roots_legendre(8)
        self.n16 = roots_legendre(16)

    def _cell(self, lo, hi, rule):
        t, w = rule
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return half * np.sum(w[None, :] * self.f(mid[:, None] + half[:, None] * t[None, :]), axis=1)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """``int_{x0}^{x} f`` for x on one side of the origin with ``|x| >= x0``."""
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return np.zeros(0)
        sgn = 1.0 if x.flat[0] >= 0 else -1.0
        ax = np.abs(x)
        # Cells of width at most 0.05 merged with the query points.
        top = float(ax.max())
        fine = np.linspace(self.x0, top, max(2, int(np.ceil((top - self.x0) / 0.05)) + 1))
        edges = np.union1d(fine, ax)
        lo, hi = sgn * edges[:-1], sgn * edges[1:]
        v8 = self._cell(lo, hi, self.n8)
        v16 = self._cell(lo, hi, self.n16)
        acc = np.concatenate([[0.0], np.cumsum(v16)])
        err = np.concatenate([[0.0], np.cumsum(np.abs(v16 - v8))])
        bad = err > self.tol * np.maximum(1.0, np.abs(acc))
        if bad.any():
            j = int(np.argmax(bad))
            raise QuadratureError(f"tail quadrature misses tolerance near x = {sgn * edges[j]:.6g} (err {err[j]:.3g})")
        return acc[np.searchsorted(edges, ax)]


@dataclass(frozen=True)
class IntermediateState:
    potential: Potential
    x0: float
    a: float
    k: float
    b: float
    b_left: float
    order: int
    c_F_bound: float
    conditions: ConditionReport
    ratio_checks: tuple = ()

    # -- evaluation ---------------------------------------------------------

    def _g(self, x):
        return self.potential.g(x) if self.order == 2 else np.zeros_like(x)

    def _dg(self, x):
        return self.potential.dg(x) if self.order == 2 else np.zeros_like(x)

    def _slope(self, x):
        b = np.where(x >= 0, self.b, self.b_left)
        return b

    def F0(self, x: np.ndarray) -> np.ndarray:
        """``int_{±x0}^{x} sqrt V`` on the tails (signed so it is positive), zero inside."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        sqrtV = lambda s: np.sqrt(self.potential.V(s))  # noqa: E731
        for sgn in (1.0, -1.0):
            mask = sgn * x >= self.x0
            if mask.any():
                out[mask] = sgn * _TailIntegral(sqrtV, self.x0)(x[mask])
        return out

    def F(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = self._slope(x)
        core = b * x * x / 2.0
        tail = np.abs(x) >= self.x0
        out = core.copy()
        if tail.any():
            xt = x[tail]
            bt = b[tail]
            val = self.F0(xt) + bt * self.x0**2 / 2.0
            if self.order == 2:
                # int g = (1/4) log(V(x)/V(±x0))
                edge = np.sign(xt) * self.x0
                val = val + 0.25 * (np.log(self.potential.V(xt)) - np.log(self.potential.V(edge)))
            out[tail] = val
        return out

    def dF(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = self._slope(x)
        tail = np.abs(x) >= self.x0
        xt = np.where(tail, x, self.x0)
        sg = np.sign(xt)
        tail_val = sg * np.sqrt(self.potential.V(xt)) + self._g(xt)
        return np.where(tail, tail_val, b * x)

    def W(self, x):
        """``-F'' + F'^2`` branchwise."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = self._slope(x)
        tail = np.abs(x) >= self.x0
        xt = np.where(tail, x, self.x0)
        V = self.potential.V(xt)
        sg = np.sign(xt)
        if self.order == 1:
            tail_val = -sg * self.potential.sqrt_derivative(xt) + V
        else:
            g = self._g(xt)
            tail_val = -self._dg(xt) + V + g * g
        return np.where(tail, tail_val, -b + b * b * x * x)

    def V_minus_W(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        b = self._slope(x)
        tail = np.abs(x) >= self.x0
        xt = np.where(tail, x, self.x0)
        if self.order == 1:
            tail_val = np.sign(xt) * self.potential.sqrt_derivative(xt)
        else:
            g = self._g(xt)
            tail_val = self._dg(xt) - g * g
        return np.where(tail, tail_val, b - b * b * x * x + self.potential.V(x))

    # -- invariants ---------------------------------------------------------

    def continuity_jumps(self) -> tuple[float, float]:
        """``|F(x0+) - F(x0-)|`` and the same for F', maximized over both seams."""
        jumps_F, jumps_dF = [], []
        for sgn, b in ((1.0, self.b), (-1.0, self.b_left)):
            edge = sgn * self.x0
            core_F = b * self.x0**2 / 2.0
            tail_F = float(self.F(np.array([edge]))[0])
            core_dF = b * edge
            tail_dF = float(sgn * np.sqrt(self.potential.V(np.array([edge])))[0] + self._g(np.array([edge]))[0])
            jumps_F.append(abs(tail_F - core_F))
            jumps_dF.append(abs(tail_dF - core_dF))
        return max(jumps_F), max(jumps_dF)

    def records(self, instance: str = "", x_max: float = 5.0) -> list[CheckRecord]:
        jF, jdF = self.continuity_jumps()
        recs = [
            within("F_continuity", instance, jF, 1e-8),
            within("dF_continuity", instance, jdF, 1e-8),
            at_most("sobolev_chain", instance, 2.0 * self.c_F_bound, 1.0 / min(self.a, self.b, self.b_left)),
        ]
        if self.order == 1:
            xt = np.linspace(self.x0, max(x_max, self.x0 * 1.5), 400)[1:]
            F0 = self.F0(xt)
            quad = math.sqrt(float(self.potential.V(np.array([self.x0]))[0])) * (xt - self.x0) + 0.5 * self.a * (xt - self.x0) ** 2
            slack = float(np.min(F0 - quad))
            recs.append(at_most("tail_quadratic_lower_bound", instance, 0.0, slack + 1e-12 * float(np.max(F0)), rtol=0.0))
        recs.extend(self.ratio_checks)
        return recs

    def as_dict(self) -> dict:
        return {
            "potential": self.potential.name,
            "order": self.order,
            "x0": self.x0,
            "a": self.a,
            "k": self.k,
            "b": self.b,
            "b_left": self.b_left,
            "c_F_bound": self.c_F_bound,
        }


def _right_left_b(pot: Potential, x0: float, order: int) -> tuple[float, float]:
    out = []
    for sgn in (1.0, -1.0):
        edge = np.array([sgn * x0])
        val = math.sqrt(float(pot.V(edge)[0]))
        if order == 2:
            val += sgn * float(pot.g(edge)[0])
        out.append(val / x0)
    return out[0], out[1]


def build_intermediate(pot: Potential, x0: Optional[float] = None, x_max: float = 10.0) -> IntermediateState:
    """First order intermediate state: quadratic core ``b x^2/2`` and tail ``int sqrt V``."""
    x0 = pot.x0 if x0 is None else x0
    cond = check_eckmann_conditions(pot, x0, x_max)
    if not cond.ok:
        raise ConditionFailed("log-derivative of V is not bounded; use the second order construction", failed=("log_derivative",))
    b, b_left = _right_left_b(pot, x0, 1)
    if pot.even:
        b_left = b
    c_F = 1.0 / (2.0 * min(cond.a, b, b_left))
    return IntermediateState(pot, x0, cond.a, cond.k, b, b_left, 1, c_F, cond)


def build_second_order(
    pot: Potential, x0: Optional[float] = None, x_max: float = 4.0, n: int = 2001, threshold: float = RATIO_THRESHOLD
) -> IntermediateState:
    """Second order state: tail ``int (sqrt V + g)`` with ``g = (log V)'/4``.

    The ``o(F_0)`` requirements on ``g^2`` and ``|g'|`` are certified as
    ratios below ``threshold`` at the probe edge that decrease over the last
    decade of the probe range.
    """
    x0 = pot.x0 if x0 is None else x0
    failed = []
    a_vals = []
    ratio_records = []
    probe = np.linspace(x0, x_max, n)
    tmp = IntermediateState(pot, x0, 1.0, math.nan, 1.0, 1.0, 2, math.nan, None)  # F0 only
    sides = [probe] if pot.even else [probe, -probe]
    for side in sides:
        sgn = np.sign(side[0])
        slope = sgn * (pot.sqrt_derivative(side) + pot.dg(side) * sgn)
        a_vals.append(float(slope.min()))
        if slope.min() <= 0:
            failed.append("slope_with_correction")
        F0 = np.abs(tmp.F0(side[1:]))
        g2 = pot.g(side[1:]) ** 2 / F0
        dg = np.abs(pot.dg(side[1:])) / F0
        last = side[1:] >= side[-1] - 0.1 * (side[-1] - side[0])
        for label, ratio in (("g_squared_ratio", g2), ("g_prime_ratio", dg)):
            decreasing = bool(np.all(np.diff(ratio[last]) <= 1e-15))
            ok = bool(ratio[-1] < threshold and decreasing)
            ratio_records.append(
                CheckRecord(label, pot.name, float(ratio[-1]), threshold, ok, {"decreasing": decreasing, "x": float(side[-1])})
            )
            if not ok:
                failed.append(label)
    if failed:
        raise ConditionFailed(f"second order conditions failed: {sorted(set(failed))}", failed=tuple(sorted(set(failed))))
    a = min(a_vals)
    b, b_left = _right_left_b(pot, x0, 2)
    if pot.even:
        b_left = b
    k = float(np.max(np.abs(pot.log_derivative(probe))))
    cond = ConditionReport(a, k, False, True, x0, x_max, {"second_order": True})
    c_F = 1.0 / (2.0 * min(a, b, b_left))
    return IntermediateState(pot, x0, a, k, b, b_left, 2, c_F, cond, tuple(ratio_records))


# ---------------------------------------------------------------------------
# Widening tests


@dataclass(frozen=True)
class WideningResult:
    L: float
    log_integral: float
    log_integral_wide: float
    log_integral_double: float
    stable: bool
    diverging: bool

    @property
    def log_change(self) -> float:
        return self.log_integral_wide - self.log_integral

    @property
    def growth_factor_log(self) -> float:
        return self.log_integral_double - self.log_integral


def log_integral(log_integrand: Callable, lo: float, hi: float, n: int = 20001) -> float:
    """``log int_lo^hi e^{log_integrand}`` by Simpson's rule in log space."""
    if n % 2 == 0:
        n += 1
    x = np.linspace(lo, hi, n)
    w = np.full(n, 2.0)
    w[1:-1:2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (x[1] - x[0]) / 3.0
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.asarray(log_integrand(x), dtype=float)
    vals = np.where(np.isnan(vals), -np.inf, vals)
    return float(logsumexp(vals + np.log(w)))


def widening_test(log_integrand: Callable, L: float, n: int = 20001, symmetric: bool = True) -> WideningResult:
    """Compare the integral over ``[-L, L]`` with ``1.25 L`` and ``2 L``."""
    lo = (lambda s: -s) if symmetric else (lambda s: 0.0)
    base = log_integral(log_integrand, lo(L), L, n)
    wide = log_integral(log_integrand, lo(1.25 * L), 1.25 * L, n)
    double = log_integral(log_integrand, lo(2.0 * L), 2.0 * L, 2 * n - 1)
    stable = bool(abs(wide - base) < STABLE_LOG_CHANGE)
    diverging = bool(double - base > math.log(10.0))
    return WideningResult(L, base, wide, double, stable, diverging)


# ---------------------------------------------------------------------------
# Perturbation step


@dataclass
class PipelineReport:
    name: str
    state: IntermediateState
    params: LsiParams
    L: float
    n: int
    lambda0: float
    lambda_direct: float
    gap: float
    M: float
    log_gap_bound: float
    log_c1_bound: float
    gamma1_estimate: float
    records: list
    tails: dict

    @property
    def ok(self) -> bool:
        return all_ok(self.records)

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "state": self.state.as_dict(),
            "params": {"c": self.params.c, "kappa": self.params.kappa, "nu": self.params.nu},
            "L": self.L,
            "n": self.n,
            "lambda0_relative": self.lambda0,
            "lambda0_direct": self.lambda_direct,
            "gap": self.gap,
            "M": self.M,
            "log_gap_bound": self.log_gap_bound,
            "log_c1_bound": self.log_c1_bound,
            "gamma1_estimate": self.gamma1_estimate,
            "tails": self.tails,
            "ok": self.ok,
            "records": [r.as_dict() for r in self.records],
        }


def auto_half_width(state: IntermediateState, target: float = 35.0, x_cap: float = 50.0) -> float:
    """Smallest L with ``F(±L) >= target`` so that ``e^{-2F}`` is below ``e^{-70}`` at the edges."""
    xs = np.linspace(0.05, x_cap, 2000)
    for x in xs:
        if min(state.F(np.array([x]))[0], state.F(np.array([-x]))[0]) >= target:
            return float(x)
    return x_cap


def _tail_log_integrand(state: IntermediateState, coefficient: float, V1: Optional[Callable] = None):
    def f(x):
        pert = state.V_minus_W(x) + (0.0 if V1 is None else V1(x))
        return coefficient * pert - 2.0 * state.F(x)

    return f


def tail_checks(
    state: IntermediateState,
    kappa: float,
    L: float,
    nus: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0),
    V1: Optional[Callable] = None,
    n: int = 20001,
) -> dict:
    out = {"kappa": widening_test(_tail_log_integrand(state, kappa, V1), L, n)}
    for nu in nus:
        out[f"nu={nu}"] = widening_test(_tail_log_integrand(state, -nu, V1), L, n)
    return out


def perturbation_step(
    state: IntermediateState,
    kappa: float = 0.25,
    nu: Optional[float] = None,
    V1: Optional[Callable] = None,
    n: int = 4001,
    L: Optional[float] = None,
    instance: Optional[str] = None,
    tol_psi: float = 1e-3,
) -> PipelineReport:
    """Treat ``V - W (+ V1)`` as a perturbation of ``m^F`` and run the bound battery.

    Raises TailDivergence when the widening test says ``int e^{kappa(V-W)} dm^F``
    is not finite.
    """
    name = instance or state.potential.name + ("" if V1 is None else "+V1")
    c_F = state.c_F_bound
    nu = 4.0 * c_F if nu is None else nu
    if not nu > 2.0 * c_F:
        raise DomainError(f"nu must exceed 2 c_F = {2 * c_F}")
    L = auto_half_width(state) if L is None else L
    tails = tail_checks(state, kappa, L, V1=V1)
    kap = tails["kappa"]
    if kap.diverging or not kap.stable:
        raise TailDivergence(
            f"int e^(kappa (V - W)) dm^F does not stabilize (log change {kap.log_change:.3g}, "
            f"log growth to 2L {kap.growth_factor_log:.3g}) at kappa = {kappa}"
        )
    records = []
    for key, res in tails.items():
        records.append(CheckRecord("tail_stable", f"{name}:{key}", abs(res.log_change), STABLE_LOG_CHANGE, res.stable, {"L": L}))
    threshold = 8.0 / state.k**2 if state.order == 1 and math.isfinite(state.k) else math.inf
    grid = Grid.symmetric(L, n)
    x = grid.nodes
    F = state.F(x)
    mF = build_log_measure(grid, -2.0 * F)
    pert = state.V_minus_W(x) + (0.0 if V1 is None else V1(x))
    params = LsiParams(c_F, kappa, nu)
    gsm = G.transform(mF, pert)
    records.append(within("intertwining", name, gsm.intertwining_error, 1e-6))
    # Intermediate closure: the Lebesgue ground state of W is e^{-F}.
    leb = lebesgue(grid)
    closure = solve(leb, state.W(x))
    psi0 = np.exp(-(F - F.min()))
    psi0 /= math.sqrt(np.sum(psi0 * psi0 * leb.weights) / leb.total_mass)
    records.append(within("wkb_closure", name, float(np.abs(closure.psi - psi0).max()), 1e-3))
    # Consecutive transforms: psi0 psi1 against the direct solve of V (+V1).
    Vfull = state.potential.V(x) + (0.0 if V1 is None else V1(x))
    direct = solve(leb, Vfull)
    prod = psi0 * gsm.psi.psi
    prod /= math.sqrt(np.sum(prod * prod * leb.weights) / leb.total_mass)
    records.append(within("consecutive_psi", name, float(np.abs(direct.psi - prod).max()), tol_psi))
    records.append(within("consecutive_lambda", name, direct.lambda0 - closure.lambda0 - gsm.lambda0, 1e-4))
    cert = G.lambda0_certificate(mF, pert, params, gsm.lambda0, name)
    records.extend(cert.records)
    roots = K.moment_roots(params)
    for r in (0.25 * roots.r0, 0.75 * roots.r0):
        for s in (0.25 * min(roots.s0, 40.0), 0.75 * min(roots.s0, 40.0)):
            records.append(G.moment_product_check(gsm, r, s, params, name))
    records.extend(G.dlsi_check(gsm, None, None, params, name))
    gap = G.spectral_gap(gsm)
    M = max(cert.M, 1.0)
    mt = K.main_theorem_constants(params, M)
    records.append(log_at_most("gap_vs_main_theorem", name, mt.log_gap_bound, math.log(gap)))
    a = K.default_dlsi_parameter(params)
    s = K.psi_inverse_index(params, a)
    log_k, log_n = G.log_shifted_norms(gsm, params)
    D = K.dlsi_defect_from_psi_inverse(params, a, lp_norm(gsm.base, gsm.psi_inverse(), s, mask=gsm.positive), math.exp(log_n))
    est = G.aida_gap_estimate(gsm, c_F, a, max(D, 0.0))
    if est.feasible:
        records.append(at_most("gap_vs_aida_estimate", name, 1.0 / est.gamma1, gap))
    tails_out = {k: {"log_integral": v.log_integral, "log_change": v.log_change, "stable": v.stable} for k, v in tails.items()}
    tails_out["kappa_threshold_first_order"] = threshold
    return PipelineReport(
        name, state, params, L, n, gsm.lambda0, direct.lambda0, gap, M, mt.log_gap_bound, mt.log_c1_bound, est.gamma1, records, tails_out
    )


def run_example(name: str, kappa: float = 0.25, n: int = 4001, V1: Optional[Callable] = None, **kwargs) -> PipelineReport:
    """Build the named potential, pick the route from the conditions, and run the pipeline."""
    pot = named_potential(name, **kwargs)
    cond = check_eckmann_conditions(pot, x_max=10.0 if name != "super" else 4.0)
    state = build_intermediate(pot) if cond.ok else build_second_order(pot)
    return perturbation_step(state, kappa=kappa, V1=V1, n=n)


# ---------------------------------------------------------------------------
# Malrieu-Roberto


@dataclass
class MalrieuRobertoReport:
    beta: float
    c: float
    M: float
    lambda0: float
    gap: float
    witness_x: Optional[float]
    witness_value: Optional[float]
    linear_growth: tuple
    records: list

    @property
    def ok(self) -> bool:
        return all_ok(self.records)

    def as_dict(self) -> dict:
        return {
            "beta": self.beta,
            "c": self.c,
            "M": self.M,
            "lambda0": self.lambda0,
            "gap": self.gap,
            "nonconvexity_witness": {"x": self.witness_x, "F''": self.witness_value},
            "W_linear_growth": list(self.linear_growth),
            "ok": self.ok,
            "records": [r.as_dict() for r in self.records],
        }


def malrieu_roberto(
    beta: float = 1.0, n: int = 4001, L: float = 8.0, kappa: Optional[float] = None, nu: Optional[float] = None, reading: str = "consistent"
) -> MalrieuRobertoReport:
    """Split ``V_F = V_0 + V_1`` with V_0 quadratic and check the hypotheses and bounds on the Gaussian base."""
    c = I.malrieu_roberto_c(beta, reading)
    kappa_max = 1.0 / (2.0 * c * (2.0 + abs(beta)) ** 2)
    kappa = 0.45 * kappa_max if kappa is None else kappa
    nu = 4.0 * c if nu is None else nu
    name = f"malrieu_roberto(beta={beta})"
    records = []
    # U and W on a long sample.
    xs = np.linspace(-60.0, 60.0, 120001)
    U = xs**2 * (2.0 + beta * np.cos(xs)) ** 2 - xs**2 * (2.0 - abs(beta)) ** 2
    records.append(at_most("U_nonnegative", name, -float(U.min()), 0.0, rtol=0.0))
    records.append(at_most("U_upper", name, float(np.max(U - xs**2 * (2.0 + abs(beta)) ** 2)), 0.0, rtol=0.0))
    _, dF, d2F = I.malrieu_roberto_F(xs, beta)
    Wmr = dF * dF - d2F - xs**2 * (2.0 + beta * np.cos(xs)) ** 2
    slope, intercept = np.polyfit(np.abs(xs), np.abs(Wmr), 1) if beta else (0.0, float(np.abs(Wmr).max()))
    c1 = float(np.max((np.abs(Wmr) - np.abs(Wmr).min()) / np.maximum(np.abs(xs), 1.0)))
    c2 = float(np.abs(Wmr[np.abs(xs) <= 1.0]).max()) + c1
    records.append(at_most("W_linear_growth", name, float(np.max(np.abs(Wmr) - c1 * np.abs(xs) - c2)), 0.0, rtol=0.0))
    # Non-convexity witness beyond x = 10.
    far = np.linspace(10.0, 30.0, 20001)
    _, _, f2 = I.malrieu_roberto_F(far, beta)
    j = int(np.argmin(f2))
    witness = (float(far[j]), float(f2[j])) if f2[j] < -1.0 else (None, None)
    if beta:
        records.append(at_most("nonconvexity_witness", name, float(f2[j]), -1.0, rtol=0.0, detail={"x": float(far[j])}))
    # Hypotheses on the Gaussian base, by widening.
    def log_pert(coef):
        def f(x):
            _, V1, _ = I.malrieu_roberto_split(x, beta, reading)
            return coef * V1 - x * x / (2.0 * c)

        return f

    for key, coef in (("kappa", kappa), ("nu", -nu)):
        res = widening_test(log_pert(coef), L)
        records.append(CheckRecord("tail_stable", f"{name}:{key}", abs(res.log_change), STABLE_LOG_CHANGE, res.stable, {"L": L}))
    inst = I.malrieu_roberto(beta, n=n, half_width=L, kappa=kappa, nu=nu, reading=reading)
    gsm = G.transform(inst.measure, inst.V)
    params = inst.params
    cert = G.lambda0_certificate(inst.measure, inst.V, params, gsm.lambda0, name)
    records.extend(cert.records)
    x = inst.grid.nodes
    V0, V1, _ = I.malrieu_roberto_split(x, beta, reading)
    cons = G.consecutive_transform_check(lebesgue(inst.grid), V0, V1, instance=name)
    records.extend(cons.records)
    roots = K.moment_roots(params)
    for r in (0.25 * roots.r0, 0.75 * roots.r0):
        for s in (0.25 * min(roots.s0, 40.0), 0.75 * min(roots.s0, 40.0)):
            records.append(G.moment_product_check(gsm, r, s, params, name))
    records.extend(G.dlsi_check(gsm, None, None, params, name))
    gap = G.spectral_gap(gsm)
    M = max(cert.M, 1.0)
    mt = K.main_theorem_constants(params, M)
    records.append(log_at_most("gap_vs_main_theorem", name, mt.log_gap_bound, math.log(gap)))
    return MalrieuRobertoReport(beta, c, cert.M, gsm.lambda0, gap, witness[0], witness[1], (slope, intercept), records)


# ---------------------------------------------------------------------------
# Toy model


@dataclass
class ToyModelReport:
    n: int
    lam: float
    A_norm: float
    c_F_bound: float
    c_F_product: float
    log_c_factor: float
    log_c_product: float
    tail: WideningResult
    pipeline: PipelineReport
    records: list

    @property
    def ok(self) -> bool:
        return all_ok(self.records)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "lambda": self.lam,
            "A_norm": self.A_norm,
            "c_F_bound": self.c_F_bound,
            "c_F_product": self.c_F_product,
            "log_c_factor": self.log_c_factor,
            "log_c_product": self.log_c_product,
            "tail_log_change": self.tail.log_change,
            "ok": self.ok,
            "records": [r.as_dict() for r in self.records],
        }


def toy_model_constants(n: int = 1, lam: float = 1.0, A_norm: float = 0.0, alpha_b: float = 50.0, grid_n: int = 4001) -> ToyModelReport:
    """Per-factor constants for ``-d^2/dx^2 + lam x^4`` and their dimension-free tensorization.

    The perturbed constant is astronomically large, so it is carried as a log;
    tensorization takes the maximum, which commutes with log.
    ``alpha_b`` is the Gaussian coefficient in the admissibility test
    ``int e^{alpha b x^2} dm^F < inf``; it is raised to ``A_norm`` when that is larger.
    """
    if n < 1 or lam <= 0 or A_norm < 0:
        raise DomainError("need n >= 1, lambda > 0, A_norm >= 0")
    pot = power(2.0, lam, x0=1.0)
    state = build_intermediate(pot)
    pipeline = perturbation_step(state, kappa=0.25, n=grid_n, instance=f"toy_factor(lambda={lam})")
    log_c_factor = pipeline.log_c1_bound
    log_c_product = max([log_c_factor] * n)
    c_F_product = K.tensorize_lsi([state.c_F_bound] * n)
    coef = max(alpha_b, A_norm)
    # coef x^2 - (2/3) sqrt(lam) |x|^3 peaks at coef/sqrt(lam) and turns negative at 1.5 coef/sqrt(lam).
    L = 4.0 * coef / math.sqrt(lam) + 10.0
    tail = widening_test(lambda x: coef * x * x - 2.0 * math.sqrt(lam) * np.abs(x) ** 3 / 3.0, L, n=400001)
    records = [
        CheckRecord("toy_tail_dominance", "toy", abs(tail.log_change), STABLE_LOG_CHANGE, tail.stable, {"alpha_b": coef}),
        within("toy_dimension_free", "toy", c_F_product - state.c_F_bound, 0.0),
    ] + list(pipeline.records)
    return ToyModelReport(n, lam, A_norm, state.c_F_bound, c_F_product, log_c_factor, log_c_product, tail, pipeline, records)
