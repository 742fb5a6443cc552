"""Closed-form constants for hyperboundedness of Schrödinger semigroups.

Everything is a scalar function of an LSI triple ``(c, kappa, nu)`` and, where
needed, the controlling functional ``M = ||e^V||_kappa * ||e^{-V}||_nu``.
The base measure is assumed to satisfy ``Ent(u^2) <= 2c int |grad u|^2``.

Conventions
-----------
``kappa = inf`` and ``nu = inf`` are accepted and select the explicit limit
branches (bounded potentials). ``nu <= 2c`` is rejected wherever the interval
of validity ``(q0, p0)`` is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from scipy import integrate, optimize

from hypercon.errors import DomainError

LOG3 = math.log(3.0)


@dataclass(frozen=True)
class LsiParams:
    c: float
    kappa: float
    nu: float

    def __post_init__(self):
        for name in ("c", "kappa", "nu"):
            value = getattr(self, name)
            if not (value > 0) or math.isnan(value):
                raise DomainError(f"{name} must be positive, got {value!r}")
        if math.isinf(self.c):
            raise DomainError("c must be finite")

    @property
    def nu_admissible(self) -> bool:
        return self.nu > 2.0 * self.c

    @property
    def c_nu(self) -> float:
        """Sobolev coefficient at p = 2 after perturbation, ``c / (1 - 2c/nu)``."""
        _require_interval(self)
        if math.isinf(self.nu):
            return self.c
        return self.c / (1.0 - 2.0 * self.c / self.nu)

    @property
    def b_kappa(self) -> float:
        if math.isinf(self.kappa):
            return 1.0
        return math.sqrt(1.0 + 2.0 * self.c / self.kappa)


@dataclass(frozen=True)
class IntervalRoots:
    q0: float
    p0: float
    a_nu: float


@dataclass(frozen=True)
class MomentRoots:
    s0: float
    r0: float
    b_kappa: float


def _require_interval(params: LsiParams) -> None:
    if not params.nu > 2.0 * params.c:
        raise DomainError(
            f"nu={params.nu} must exceed 2c={2 * params.c}; the interval of validity is empty"
        )


# ---------------------------------------------------------------------------
# Interval of validity and the hyperboundedness clock


def interval_roots(params: LsiParams) -> IntervalRoots:
    """Roots of ``p^2 - (2 nu / c)(p - 1)``; the interval ``(q0, p0)`` contains 2."""
    _require_interval(params)
    c, nu = params.c, params.nu
    if math.isinf(nu):
        return IntervalRoots(q0=1.0, p0=math.inf, a_nu=1.0)
    a_nu = math.sqrt(1.0 - 2.0 * c / nu)
    p0 = (nu / c) * (1.0 + a_nu)
    # 1/q0 = (1 + a_nu)/2 avoids the cancellation in (nu/c)(1 - a_nu).
    q0 = 2.0 / (1.0 + a_nu)
    return IntervalRoots(q0=q0, p0=p0, a_nu=a_nu)


def _check_in_interval(roots: IntervalRoots, p: float) -> None:
    if not (roots.q0 < p < roots.p0):
        raise DomainError(f"p={p} outside ({roots.q0}, {roots.p0})")


def sobolev_coefficient_p(params: LsiParams, p: float) -> float:
    """``c_nu(p) = nu p / ((p0 - p)(p - q0))``."""
    roots = interval_roots(params)
    _check_in_interval(roots, p)
    if math.isinf(params.nu):
        return params.c * p / (2.0 * (p - 1.0))
    return params.nu * p / ((roots.p0 - p) * (p - roots.q0))


def tau(params: LsiParams, p: float) -> float:
    """Time needed to reach index p from 2; negative for p < 2."""
    roots = interval_roots(params)
    _check_in_interval(roots, p)
    inv_p = 1.0 / p
    inv_p0 = 0.0 if math.isinf(roots.p0) else 1.0 / roots.p0
    ratio = (1.0 / roots.q0 - inv_p) / (inv_p - inv_p0)
    return params.c / (2.0 * roots.a_nu) * math.log(ratio)


def p_of_t(params: LsiParams, t: float) -> float:
    """Largest index reachable from 2 at time t; inverse of ``tau`` on t >= 0."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    roots = interval_roots(params)
    inv_p0 = 0.0 if math.isinf(roots.p0) else 1.0 / roots.p0
    rate = 2.0 * roots.a_nu / params.c
    # Divide through by the exponential for large t to avoid inf/inf.
    if rate * t > 700.0:
        w = math.exp(-rate * t)
        return (w + 1.0) / (w / roots.q0 + inv_p0)
    e = math.exp(rate * t)
    return (1.0 + e) / (1.0 / roots.q0 + e * inv_p0)


def nelson_time(c: float, q: float, p: float) -> float:
    """Classical time to contraction: ``e^{-t/c} <= sqrt((q-1)/(p-1))``."""
    if not (1.0 < q <= p):
        raise DomainError("need 1 < q <= p")
    return 0.5 * c * math.log((p - 1.0) / (q - 1.0))


def hyperbound(params: LsiParams, norm_e_neg_v_nu: float, q: float, p: float, t: float) -> float:
    """Upper bound ``||e^{-V}||_nu^t`` on ``||e^{-tH}||_{q->p}``.

    Valid for ``q0 < q <= p < p0`` and ``t >= tau(p) - tau(q)``; when ``q == p``
    every ``t >= 0`` is allowed.
    """
    if q > p:
        raise DomainError("need q <= p")
    wait = tau(params, p) - tau(params, q)
    if t < 0 or t < wait * (1.0 - 1e-12):
        raise DomainError(f"t={t} is shorter than tau(p)-tau(q)={wait}")
    return norm_e_neg_v_nu**t


# ---------------------------------------------------------------------------
# Moment roots and the exponent function ell


def moment_roots(params: LsiParams) -> MomentRoots:
    """Roots ``s0 > 0 > -r0`` of ``t^2 - (2 kappa / c)(t + 1)``."""
    b = params.b_kappa
    if math.isinf(params.kappa):
        return MomentRoots(s0=math.inf, r0=1.0, b_kappa=1.0)
    # s0 = 2/(b-1) loses digits when b is close to 1; use the kappa form there.
    s0 = (params.kappa / params.c) * (b + 1.0)
    r0 = 2.0 / (b + 1.0)
    return MomentRoots(s0=s0, r0=r0, b_kappa=b)


def ell(params: LsiParams, t: float) -> float:
    """``(c / 2b) log((t + b c_nu) / (t - b c_nu))`` for ``t > b c_nu``."""
    b = params.b_kappa
    edge = b * params.c_nu
    if not t > edge:
        raise DomainError(f"ell needs t > b*c_nu = {edge}, got {t}")
    if math.isinf(t):
        return 0.0
    return params.c / (2.0 * b) * math.log1p(2.0 * edge / (t - edge))


def ell_derivative(params: LsiParams, t: float) -> float:
    edge = params.b_kappa * params.c_nu
    if not t > edge:
        raise DomainError(f"ell needs t > b*c_nu = {edge}, got {t}")
    return -params.c * params.c_nu / (t * t - edge * edge)


def _bracket_increasing(fn: Callable[[float], float], lower: float) -> float:
    """Upper end of a bracket for an increasing fn that is negative just above ``lower``."""
    upper = 2.0 * lower if lower > 0 else 1.0
    for _ in range(200):
        if fn(upper) > 0:
            return upper
        upper *= 2.0
    raise DomainError("could not bracket root")


def _solve_increasing(fn: Callable[[float], float], edge: float) -> float:
    """Root of an increasing fn on ``(edge, inf)`` with ``fn -> -inf`` at the edge."""
    upper = _bracket_increasing(fn, edge)
    for k in range(1, 16):
        lower = edge * (1.0 + 10.0**-k)
        if fn(lower) < 0:
            return optimize.brentq(fn, lower, upper, xtol=1e-15, rtol=1e-15, maxiter=500)
    # The root sits within float spacing of the edge.
    return math.nextafter(edge, math.inf)


def ell_fixed_point(params: LsiParams) -> float:
    """Unique ``t*`` with ``ell(t*) = t*``; at ``a = sigma = t*`` the DLSI forgets lambda0."""
    edge = params.b_kappa * params.c_nu
    return _solve_increasing(lambda t: t - ell(params, t), edge)


def ell_plus_t_minimizer(params: LsiParams) -> float:
    """Argmin of ``ell(t) + t``; solves ``ell'(t) = -1`` in closed form."""
    edge = params.b_kappa * params.c_nu
    return math.sqrt(edge * edge + params.c * params.c_nu)


def _a_of_s(params: LsiParams, s: float) -> float:
    return (2.0 / s + 1.0) * params.c_nu


def _sigma_of_r(params: LsiParams, r: float) -> float:
    return (2.0 / r - 1.0) * params.c_nu


def _check_rectangle(params: LsiParams, r: Optional[float], s: Optional[float]) -> MomentRoots:
    roots = moment_roots(params)
    if s is not None and not (0.0 < s < roots.s0):
        raise DomainError(f"s={s} outside (0, s0={roots.s0})")
    if r is not None and not (0.0 < r < roots.r0):
        raise DomainError(f"r={r} outside (0, r0={roots.r0})")
    return roots


def sigma_star(params: LsiParams, s: float) -> float:
    """Solution of ``sigma - ell(sigma) = ell(a)``, ``a = (2/s + 1) c_nu``."""
    _check_rectangle(params, None, s)
    target = ell(params, _a_of_s(params, s))
    edge = params.b_kappa * params.c_nu
    return _solve_increasing(lambda x: x - ell(params, x) - target, edge)


def moment_product_exponent(params: LsiParams, r: float, s: float) -> float:
    """Exponent in ``||psi||_r ||psi^{-1}||_s <= ||e^{V-lambda0}||_kappa^{exponent}``."""
    _check_rectangle(params, r, s)
    return ell(params, _a_of_s(params, s)) + ell(params, _sigma_of_r(params, r))


def moment_product_quadrature(params: LsiParams, r: float, s: float) -> float:
    """``int_{-r}^{s} kappa / ((s0 - t)(t + r0)) dt`` by adaptive quadrature."""
    roots = _check_rectangle(params, r, s)
    kappa = params.kappa
    if math.isinf(kappa):
        # kappa / s0 -> c/2 and r0 -> 1.
        integrand = lambda t: 0.5 * params.c / (1.0 + t)  # noqa: E731
    else:
        integrand = lambda t: kappa / ((roots.s0 - t) * (t + roots.r0))  # noqa: E731
    value, _ = integrate.quad(
        integrand, -r, s, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    return value


# ---------------------------------------------------------------------------
# Controlling functional, DLSI defects, gap criteria


def controlling_M(norm_eV_kappa: float, norm_e_negV_nu: float) -> float:
    if not (norm_eV_kappa > 0 and norm_e_negV_nu > 0):
        raise DomainError("norms must be positive")
    return norm_eV_kappa * norm_e_negV_nu


def _check_dlsi_range(params: LsiParams, a: float, sigma: float) -> None:
    edge = params.b_kappa * params.c_nu
    if not (a > edge and sigma > edge):
        raise DomainError(f"a and sigma must exceed b*c_nu = {edge}")


def default_dlsi_parameter(params: LsiParams) -> float:
    return 2.0 * params.c_nu * params.b_kappa


def dlsi_exponent(params: LsiParams, a: float, sigma: float) -> float:
    _check_dlsi_range(params, a, sigma)
    return a + ell(params, a) + sigma + ell(params, sigma)


def dlsi_defect(params: LsiParams, M: float, a: Optional[float] = None, sigma: Optional[float] = None) -> float:
    """``2 log M^{a + ell(a) + sigma + ell(sigma)}``; the defect term of the DLSI for m_psi."""
    if a is None:
        a = default_dlsi_parameter(params)
    if sigma is None:
        sigma = a
    if not M >= 1.0 - 1e-12:
        raise DomainError(f"M must be >= 1, got {M}")
    return 2.0 * dlsi_exponent(params, a, sigma) * math.log(max(M, 1.0))


def dlsi_defect_fixed_point(params: LsiParams, M: float) -> float:
    """``2 log M^{2 t*}`` at ``a = sigma = t*``, where the two shifted norms combine into M."""
    if not M >= 1.0 - 1e-12:
        raise DomainError(f"M must be >= 1, got {M}")
    return 4.0 * ell_fixed_point(params) * math.log(max(M, 1.0))


def dlsi_defect_measured(
    params: LsiParams,
    a: float,
    sigma: float,
    norm_e_v_kappa: float,
    norm_e_neg_v_nu: float,
) -> float:
    """Defect ``2 log(||e^{lambda0-V}||_nu^{a+sigma} ||e^{V-lambda0}||_kappa^{ell(a)+ell(sigma)})``.

    Both norms are for the shifted potential ``V - lambda0``.
    """
    _check_dlsi_range(params, a, sigma)
    return 2.0 * (
        (a + sigma) * math.log(norm_e_neg_v_nu)
        + (ell(params, a) + ell(params, sigma)) * math.log(norm_e_v_kappa)
    )


def dlsi_defect_from_psi_inverse(
    params: LsiParams, a: float, norm_psi_inv_s: float, norm_e_neg_v_nu: float
) -> float:
    """Defect ``2 log(||psi^{-1}||_s ||e^{lambda0-V}||_nu^a)`` with ``s = 2c_nu/(a - c_nu)``."""
    if not a > params.c_nu:
        raise DomainError("a must exceed c_nu")
    return 2.0 * (math.log(norm_psi_inv_s) + a * math.log(norm_e_neg_v_nu))


def psi_inverse_index(params: LsiParams, a: float) -> float:
    """The index ``s = 2 c_nu / (a - c_nu)`` paired with ``a`` in the DLSI."""
    if not a > params.c_nu:
        raise DomainError("a must exceed c_nu")
    return 2.0 * params.c_nu / (a - params.c_nu)


def wang_gap(C1: float, C2: float) -> Optional[float]:
    """Gap from a DLSI ``Ent <= 2 C1 int|grad f|^2 + C2 ||f||^2``; None once ``C2 >= log 2``."""
    if not C1 > 0 or C2 < 0:
        raise DomainError("need C1 > 0 and C2 >= 0")
    if C2 >= math.log(2.0):
        return None
    b = math.sqrt((1.0 - math.exp(-C2)) / 2.0)
    return math.log(3.0 - 4.0 * b) / (C1 * LOG3)


def rothaus_tighten(C: float, C_prime: float, D: float) -> float:
    """LSI coefficient from a DLSI ``(2C, D)`` and a Poincaré constant ``C_prime``."""
    if not (C > 0 and C_prime > 0 and D >= 0):
        raise DomainError("need C > 0, C' > 0, D >= 0")
    return C + C_prime * (D / 2.0 + 1.0)


def tensorize_lsi(c_components: Iterable[float]) -> float:
    values = list(c_components)
    if not values:
        raise DomainError("need at least one factor")
    if any(not v > 0 for v in values):
        raise DomainError("LSI constants must be positive")
    return max(values)


# ---------------------------------------------------------------------------
# Aida-type gap constants and the main-theorem assembly


@dataclass(frozen=True)
class GapConstants:
    a: float
    sigma: float
    s1: float
    alpha1: float
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    d1: float
    e1: float
    alpha: float
    beta: float
    defect: float
    log_R: float
    log_K2: float
    log_eps2: float
    log_gamma1_sharp: float
    log_gamma1_bound: float
    log_M: float
    log_beta4: float = math.nan
    log_d1: float = math.nan

    @property
    def R_squared(self) -> float:
        return _safe_exp(2.0 * self.log_R)

    @property
    def K(self) -> float:
        return _safe_exp(0.5 * self.log_K2)

    @property
    def eps(self) -> float:
        return _safe_exp(0.5 * self.log_eps2)

    @property
    def gamma1_sharp(self) -> float:
        return _safe_exp(self.log_gamma1_sharp)

    @property
    def gamma1_bound(self) -> float:
        """``d1 * M^{e1}``."""
        return _safe_exp(self.log_gamma1_bound)


def _safe_exp(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def _log_add(a: float, b: float) -> float:
    hi, lo = max(a, b), min(a, b)
    if hi == -math.inf:
        return -math.inf
    return hi + math.log1p(math.exp(lo - hi))


def aida_gap_constants(params: LsiParams, M: float) -> GapConstants:
    """Constants of the Poincaré bound ``gamma1 <= d1 M^{e1}`` for the ground state measure.

    The DLSI is taken at ``a = sigma = 2 c_nu b_kappa`` and the base Poincaré
    constant is ``gamma = c``.
    """
    _require_interval(params)
    if math.isinf(params.kappa):
        raise DomainError("aida_gap_constants needs finite kappa")
    if not M >= 1.0 - 1e-12:
        raise DomainError(f"M must be >= 1, got {M}")
    log_M = math.log(max(M, 1.0))
    c, kappa = params.c, params.kappa
    b = params.b_kappa
    a_nu = interval_roots(params).a_nu
    a = default_dlsi_parameter(params)
    sigma = a
    s1 = 1.0 / (b - 0.5)
    alpha1 = a + c * LOG3 / b
    spread = 2.0 * a + c * LOG3 / b
    defect = 2.0 * spread * log_M
    gamma = c
    log_R = 6.0 * (defect + math.exp(-1.0))
    lever = LOG3 / (1.0 / (2.0 * c) - 1.0 / params.nu)

    log_K2 = lever * log_M + (2.0 - a_nu) / a_nu * (math.log(24.0) + 2.0 * log_R)
    log_tail = _log_add(0.0, math.log(2.0 * gamma / kappa) + kappa * log_M)
    log_eps2 = (4.0 / s1) * (-2.0 * log_R - math.log(12.0) - log_K2 - log_tail) - 2.0 * alpha1 * log_M
    log_gamma1_sharp = _log_add(math.log(2.0 * a), math.log(8.0 * gamma) + log_K2 - log_eps2)

    beta1 = lever * (4.0 * b - 1.0) + 2.0 * alpha1
    beta2 = 12.0 * (2.0 * (4.0 * b - 1.0) / a_nu - 1.0)
    beta3 = 4.0 * b - 2.0
    exponent4 = 2.0 * (4.0 * b - 1.0) / a_nu - 1.0
    log_beta4 = exponent4 * (math.log(24.0) + 12.0 / math.e) + (2.0 - b) * math.log(2.0)
    beta4 = _safe_exp(log_beta4)
    beta5 = beta1 + 2.0 * beta2 * spread
    log_d1 = _log_add(math.log(2.0 * a), math.log(8.0 * c) + beta3 * math.log1p(2.0 * c / kappa) + log_beta4)
    d1 = _safe_exp(log_d1)
    e1 = beta5 + kappa * beta3
    alpha = a + d1
    beta = e1 + spread
    return GapConstants(
        a=a,
        sigma=sigma,
        s1=s1,
        alpha1=alpha1,
        beta1=beta1,
        beta2=beta2,
        beta3=beta3,
        beta4=beta4,
        beta5=beta5,
        d1=d1,
        e1=e1,
        alpha=alpha,
        beta=beta,
        defect=defect,
        log_R=log_R,
        log_K2=log_K2,
        log_eps2=log_eps2,
        log_gamma1_sharp=log_gamma1_sharp,
        log_gamma1_bound=log_d1 + e1 * log_M,
        log_M=log_M,
        log_beta4=log_beta4,
        log_d1=log_d1,
    )


@dataclass(frozen=True)
class MainTheoremConstants:
    c1_bound: float
    alpha: float
    beta: float
    gap_bound: float
    log_c1_bound: float
    log_gap_bound: float
    gap: GapConstants = field(repr=False)


def main_theorem_constants(params: LsiParams, M: float) -> MainTheoremConstants:
    """LSI coefficient ``c1`` for m_psi and the resulting spectral-gap lower bound."""
    gc = aida_gap_constants(params, M)
    spread = 2.0 * gc.a + params.c * LOG3 / params.b_kappa
    # c1 = a + gamma1 (1 + spread log M), kept in log space.
    log_c1 = _log_add(math.log(gc.a), gc.log_gamma1_bound + math.log1p(spread * gc.log_M))
    log_gap = -min(log_c1, gc.log_gamma1_bound)
    return MainTheoremConstants(
        c1_bound=_safe_exp(log_c1),
        alpha=gc.alpha,
        beta=gc.beta,
        gap_bound=_safe_exp(log_gap),
        log_c1_bound=log_c1,
        log_gap_bound=log_gap,
        gap=gc,
    )


# ---------------------------------------------------------------------------
# Bounded potentials


def psi_inverse_growth_bound(
    params: LsiParams, sup_v_minus_lambda0: float, norm_e_lambda0_minus_v_nu: float, s: float
) -> float:
    """Polynomial growth of ``||psi^{-1}||_s`` when V is bounded above."""
    if not s > 0:
        raise DomainError("s must be positive")
    half = 0.5 * params.c * sup_v_minus_lambda0
    return (1.0 + s) ** half * norm_e_lambda0_minus_v_nu ** (3.0 * params.c_nu) * 2.0**half


@dataclass(frozen=True)
class BoundedPotentialBounds:
    """Bounds that hold when V is bounded, in terms of ``Osc(V) = sup V - inf V``."""

    c: float
    osc_V: float

    @property
    def psi_p_exponent(self) -> float:
        return 0.5 * self.c * self.osc_V

    def psi_p_bound(self, p: float) -> float:
        if p < 2:
            raise DomainError("needs p >= 2")
        return (p - 1.0) ** self.psi_p_exponent

    def psi_r_lower(self, r: float) -> float:
        if not 0 < r < 2:
            raise DomainError("needs 0 < r < 2")
        return math.exp(-self.c * (2.0 / r - 1.0) * self.osc_V)

    def product_bound(self, r: float, s: float) -> float:
        if not (0 < r < 1 and s > 0):
            raise DomainError("needs 0 < r < 1 and s > 0")
        return ((1.0 + s) / (1.0 - r)) ** self.psi_p_exponent

    def psi_inv_bound(self, s: float, r: float = 0.5) -> float:
        return self.product_bound(r, s) * math.exp(self.c * (2.0 / r - 1.0) * self.osc_V)

    @property
    def dlsi_coeff(self) -> tuple[float, float]:
        """``(2a, defect)`` at ``a = sigma = 2c``."""
        return 4.0 * self.c, 2.0 * self.c * (4.0 + LOG3) * self.osc_V

    def dlsi_defect(self, a: float, sigma: float) -> float:
        if not (a > self.c and sigma > self.c):
            raise DomainError("a and sigma must exceed c")
        ell0 = lambda t: 0.5 * self.c * math.log((t + self.c) / (t - self.c))  # noqa: E731
        return 2.0 * (a + sigma + ell0(a) + ell0(sigma)) * self.osc_V

    @staticmethod
    def dhs_c1(c: float, osc_F: float) -> float:
        """LSI coefficient for the weight ``e^{-2F}`` relative to the base."""
        return c * math.exp(2.0 * osc_F)

    @staticmethod
    def federbush(norm_e_neg_v_2c: float) -> float:
        return -math.log(norm_e_neg_v_2c)

    @property
    def wang_threshold(self) -> float:
        return math.log(2.0) / (2.0 * self.c * (4.0 + LOG3))


def bounded_potential_bounds(c: float, osc_V: float) -> BoundedPotentialBounds:
    if not c > 0 or osc_V < 0:
        raise DomainError("need c > 0 and osc_V >= 0")
    return BoundedPotentialBounds(c=c, osc_V=osc_V)


def constants_report(params: LsiParams, M: float) -> dict:
    """Every scalar constant for ``(c, kappa, nu, M)`` in one flat mapping."""
    roots = interval_roots(params)
    mroots = moment_roots(params)
    main = main_theorem_constants(params, M)
    gc = main.gap
    t_star = ell_fixed_point(params)
    report = {
        "c": params.c,
        "kappa": params.kappa,
        "nu": params.nu,
        "M": M,
        "c_nu": params.c_nu,
        "a_nu": roots.a_nu,
        "q0": roots.q0,
        "p0": roots.p0,
        "b_kappa": mroots.b_kappa,
        "s0": mroots.s0,
        "r0": mroots.r0,
        "t_star": t_star,
        "ell_plus_t_minimizer": ell_plus_t_minimizer(params),
        "defect_fixed_point": dlsi_defect_fixed_point(params, M),
        "defect_default": dlsi_defect(params, M),
    }
    for name in ("a", "s1", "alpha1", "beta1", "beta2", "beta3", "beta4", "beta5", "d1", "e1", "log_R", "log_K2", "log_eps2"):
        report[name] = getattr(gc, name)
    report.update(
        gamma1_bound=gc.gamma1_bound,
        log_gamma1_bound=gc.log_gamma1_bound,
        c1_bound=main.c1_bound,
        log_c1_bound=main.log_c1_bound,
        alpha=main.alpha,
        beta=main.beta,
        gap_bound=main.gap_bound,
        log_gap_bound=main.log_gap_bound,
    )
    return report
