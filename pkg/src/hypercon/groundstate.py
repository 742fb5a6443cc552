"""Ground state transformation and the bounds that hold for ``m_psi = psi^2 m``.

All quantities are evaluated on the grid of the base measure. ``F = -log psi``
is infinite on the two Dirichlet boundary nodes; every sum that involves F,
``grad F`` or ``psi^{-1}`` runs over the interior nodes where ``psi > 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from hypercon import constants as K
from hypercon.constants import LsiParams
from hypercon.errors import DomainError, InfeasibleOnGrid, OverflowGuard
from hypercon.grid import (
    GroundState,
    WeightedGridMeasure,
    build_measure,
    dirichlet_energy,
    dirichlet_operator,
    entropy,
    integrate,
    log_exp_norm,
    lp_norm,
    schrodinger_operator,
    solve,
)
from hypercon.records import CheckRecord, at_most, log_at_most, within

# Nodes whose m_psi density is below this fraction of the peak are outside the
# bulk where pointwise residuals are reported.
BULK_THRESHOLD = 1e-10


# Rounding floor for entropies, relative to ||u||_2^2; a constant u gives ~1e-16.
ENTROPY_ATOL = 1e-13


def identity_tolerance(h: float) -> float:
    return max(1e-4, 10.0 * h * h)


@dataclass(frozen=True)
class GroundStateMeasure:
    base: WeightedGridMeasure
    psi: GroundState
    weights_psi: WeightedGridMeasure
    F: np.ndarray
    gradF: np.ndarray
    V: np.ndarray = field(repr=False)
    intertwining_error: float = float("nan")

    @property
    def lambda0(self) -> float:
        return self.psi.lambda0

    @property
    def m_psi(self) -> WeightedGridMeasure:
        return self.weights_psi

    @property
    def positive(self) -> np.ndarray:
        """Interior nodes with ``psi > 0``."""
        mask = self.psi.psi > 0
        mask[0] = mask[-1] = False
        return mask

    @property
    def nodes(self) -> np.ndarray:
        return self.base.nodes

    @property
    def h(self) -> float:
        return self.base.grid.h

    def psi_inverse(self) -> np.ndarray:
        out = np.zeros_like(self.psi.psi)
        mask = self.positive
        out[mask] = 1.0 / self.psi.psi[mask]
        return out

    def bulk(self, threshold: float = BULK_THRESHOLD) -> np.ndarray:
        """Nodes at least two cells inside where m_psi carries non-negligible density."""
        density = self.weights_psi.density
        mask = density >= threshold * density.max()
        mask[:2] = False
        mask[-2:] = False
        return mask


def smooth_test_functions(x: np.ndarray) -> list[np.ndarray]:
    """Ten smooth functions with Gaussian-integrable growth."""
    return [
        np.ones_like(x),
        x,
        x * x - 1.0,
        np.sin(x),
        np.cos(2.0 * x),
        np.tanh(2.0 * x),
        1.0 / (1.0 + x * x),
        np.exp(0.5 * x),
        np.sqrt(1.0 + x * x),
        x * np.exp(-x * x / 8.0),
    ]


def _log_psi(psi: np.ndarray) -> np.ndarray:
    F = np.full_like(psi, np.inf)
    pos = psi > 0
    F[pos] = -np.log(psi[pos])
    return F


def _interior_gradient(F: np.ndarray, h: float) -> np.ndarray:
    grad = np.zeros_like(F)
    grad[1:-1] = np.gradient(F[1:-1], h)
    return grad


def from_ground_state(base: WeightedGridMeasure, gs: GroundState, V: np.ndarray) -> GroundStateMeasure:
    psi = gs.psi
    m_psi = build_measure(base.grid, psi * psi * base.density, normalize=False)
    F = _log_psi(psi)
    gradF = _interior_gradient(np.where(np.isfinite(F), F, 0.0), base.grid.h)
    V = np.broadcast_to(np.asarray(V, dtype=float), psi.shape).copy()
    gsm = GroundStateMeasure(base, gs, m_psi, F, gradF, V)
    u_battery = smooth_test_functions(base.nodes)[1:6]
    error = max(abs(r) for r in intertwining_residuals(gsm, u_battery))
    return GroundStateMeasure(base, gs, m_psi, F, gradF, V, intertwining_error=error)


def transform(m: WeightedGridMeasure, V, params: Optional[LsiParams] = None) -> GroundStateMeasure:
    """Solve ``(m, V)`` and build the ground state measure; ``params`` is accepted for symmetry."""
    V = np.broadcast_to(np.asarray(V, dtype=float), m.nodes.shape)
    return from_ground_state(m, solve(m, V), V)


def intertwining_residuals(gsm: GroundStateMeasure, us: Sequence[np.ndarray]) -> list[float]:
    """``<(H - lambda0)(u psi), u psi>_m - <H_psi u, u>_{m_psi}`` relative to the energy scale."""
    op = schrodinger_operator(gsm.base, gsm.V)
    psi = gsm.psi.psi
    out = []
    for u in us:
        f = u * psi
        lhs = op.quadratic_form(f) - gsm.lambda0 * integrate(gsm.base, f * f)
        rhs = dirichlet_energy(gsm.m_psi, u)
        out.append((lhs - rhs) / max(1.0, abs(rhs)))
    return out


def ground_state_transform_identity(gsm: GroundStateMeasure, u: np.ndarray) -> float:
    """``int |grad(u psi)|^2 dm - int |grad u|^2 dm_psi - int u^2 (lambda0 - V) dm_psi``."""
    psi = gsm.psi.psi
    lhs = dirichlet_energy(gsm.base, u * psi)
    rhs = dirichlet_energy(gsm.m_psi, u) + integrate(gsm.m_psi, u * u * (gsm.lambda0 - gsm.V))
    return lhs - rhs


def entropy_split_residual(gsm: GroundStateMeasure, u: np.ndarray) -> float:
    """``Ent_{m_psi}(u^2) - Ent_m((u psi)^2) - int (u psi)^2 2F dm``."""
    psi = gsm.psi.psi
    f2 = (u * psi) ** 2
    mask = gsm.positive
    cross = float(np.sum(np.where(mask, f2 * 2.0 * np.where(mask, gsm.F, 0.0), 0.0) * gsm.base.weights))
    return entropy(gsm.m_psi, u * u) - entropy(gsm.base, f2) - cross


# ---------------------------------------------------------------------------
# WKB and Aida


def wkb_potential(F: np.ndarray, m: WeightedGridMeasure) -> np.ndarray:
    """``nabla^* nabla F + |grad F|^2`` with the grid operator of m; NaN where undefined."""
    F = np.asarray(F, dtype=float)
    finite = np.isfinite(F)
    Ff = np.where(finite, F, 0.0)
    out = dirichlet_operator(m).apply(Ff) + np.gradient(Ff, m.grid.h) ** 2
    valid = finite.copy()
    valid[1:-1] &= finite[:-2] & finite[2:]
    valid[0] = valid[-1] = False
    out[~valid] = np.nan
    return out


def wkb_residual_field(gsm: GroundStateMeasure, V=None, lambda0: Optional[float] = None) -> np.ndarray:
    V = gsm.V if V is None else np.broadcast_to(np.asarray(V, dtype=float), gsm.F.shape)
    lambda0 = gsm.lambda0 if lambda0 is None else lambda0
    return wkb_potential(gsm.F, gsm.base) - (V - lambda0)


def wkb_residual(gsm: GroundStateMeasure, V=None, lambda0: Optional[float] = None, mask=None) -> float:
    """Largest WKB residual over the bulk of m_psi (or over ``mask``)."""
    if np.any(gsm.psi.psi[1:-1] <= 0):
        raise DomainError("psi vanishes at an interior node")
    field_ = wkb_residual_field(gsm, V, lambda0)
    mask = gsm.bulk() if mask is None else mask
    return float(np.nanmax(np.abs(field_[mask])))


def wkb_residual_extrapolated(coarse: GroundStateMeasure, fine: GroundStateMeasure) -> float:
    """WKB residual with the leading ``h^2`` term removed by Richardson extrapolation.

    ``fine`` must live on the grid with every coarse cell halved.
    """
    gc, gf = coarse.base.grid, fine.base.grid
    if not (gf.n == 2 * gc.n - 1 and gf.x_min == gc.x_min and gf.x_max == gc.x_max):
        raise DomainError("fine grid must halve the coarse spacing on the same interval")
    rc = wkb_residual_field(coarse)
    rf = wkb_residual_field(fine)[::2]
    extrapolated = (4.0 * rf - rc) / 3.0
    mask = coarse.bulk()
    mask[:3] = mask[-3:] = False
    return float(np.nanmax(np.abs(extrapolated[mask])))


def _aida_terms(gsm: GroundStateMeasure, v: Callable, dv: Callable, region=None):
    mask = gsm.positive if region is None else (gsm.positive & region)
    F = np.where(mask, gsm.F, 0.0)
    w = np.where(mask, gsm.base.weights, 0.0)
    lhs = float(np.sum((dv(F) + v(F)) * gsm.gradF**2 * w))
    rhs = float(np.sum(v(F) * (gsm.V - gsm.lambda0) * w))
    return lhs, rhs


def aida_identity_residual(gsm: GroundStateMeasure, v: Callable = None, dv: Callable = None) -> float:
    """``|int (v'(F) + v(F)) |grad F|^2 dm - int v(F)(V - lambda0) dm|``; ``v = 1`` by default."""
    v = v or (lambda s: np.ones_like(s))
    dv = dv or (lambda s: np.zeros_like(s))
    lhs, rhs = _aida_terms(gsm, v, dv)
    return abs(lhs - rhs)


def aida_exponential_residual(gsm: GroundStateMeasure, a: float) -> float:
    """``int e^{aF} |grad F|^2 dm - (1+a)^{-1} int e^{aF}(V - lambda0) dm``."""
    lhs, rhs = _aida_terms(gsm, lambda s: np.exp(a * s), lambda s: np.zeros_like(s))
    return abs(lhs - rhs / (1.0 + a))


def aida_level_sets(gsm: GroundStateMeasure, levels: Sequence[float], instance: str = "") -> list[CheckRecord]:
    """One-sided ``int_{F >= a} |grad F|^2 dm <= int_{F >= a} (V - lambda0) dm``."""
    records = []
    tol = identity_tolerance(gsm.h)
    for a in levels:
        lhs, rhs = _aida_terms(gsm, np.ones_like, np.zeros_like, region=gsm.F >= a)
        rec = at_most("aida_level_set", instance, lhs, rhs + tol, rtol=0.0, detail={"level": a})
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# lambda0 and the controlling functional


@dataclass(frozen=True)
class Lambda0Certificate:
    lambda0: float
    federbush_lower: float
    federbush_2c_lower: float
    aida_upper: float
    mean_upper: float
    norm_e_v_minus_lambda0_kappa: float
    norm_e_lambda0_minus_v_nu: float
    M: float
    log_M: float
    records: tuple = ()

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)


def _log_norm(m: WeightedGridMeasure, g: np.ndarray, p: float) -> float:
    value = log_exp_norm(m, g, p)
    if not math.isfinite(value):
        raise OverflowGuard(f"log-norm of exponential is not finite (p={p})")
    return value


def lambda0_certificate(
    m: WeightedGridMeasure, V, params: LsiParams, lambda0: float, instance: str = "", rtol: float = 1e-6
) -> Lambda0Certificate:
    V = np.broadcast_to(np.asarray(V, dtype=float), m.nodes.shape)
    inner = np.zeros(m.grid.n, dtype=bool)
    inner[1:-1] = True
    Vi = np.where(inner, V, 0.0)
    mi = build_measure(m.grid, np.where(inner, m.density, 0.0), normalize=False)
    log_ev = _log_norm(mi, Vi, params.kappa)
    log_env = _log_norm(mi, -Vi, params.nu)
    log_env_2c = _log_norm(mi, -Vi, 2.0 * params.c)
    log_shift_kappa = _log_norm(mi, Vi - lambda0, params.kappa)
    log_shift_nu = _log_norm(mi, lambda0 - Vi, params.nu)
    mean = integrate(mi, Vi) / mi.total_mass
    log_M = log_ev + log_env
    product = math.exp(log_shift_kappa + log_shift_nu)
    M = math.exp(log_M)
    records = (
        at_most("lambda0_federbush_nu", instance, -log_env, lambda0, rtol),
        at_most("lambda0_federbush_2c", instance, -log_env_2c, lambda0, rtol),
        at_most("lambda0_aida_upper", instance, lambda0, log_ev, rtol),
        at_most("lambda0_mean_upper", instance, lambda0, mean, rtol),
        within("lambda0_product_identity", instance, (product - M) / M, 1e-9),
    )
    return Lambda0Certificate(
        lambda0=lambda0,
        federbush_lower=-log_env,
        federbush_2c_lower=-log_env_2c,
        aida_upper=log_ev,
        mean_upper=mean,
        norm_e_v_minus_lambda0_kappa=math.exp(log_shift_kappa),
        norm_e_lambda0_minus_v_nu=math.exp(log_shift_nu),
        M=M,
        log_M=log_M,
        records=records,
    )


def log_shifted_norms(gsm: GroundStateMeasure, params: LsiParams, mask=None) -> tuple[float, float]:
    """``(log ||e^{V-lambda0}||_kappa, log ||e^{lambda0-V}||_nu)`` on interior nodes."""
    mask = gsm.positive if mask is None else mask
    shifted = np.where(mask, gsm.V - gsm.lambda0, 0.0)
    return (
        _log_norm_masked(gsm.base, shifted, params.kappa, mask),
        _log_norm_masked(gsm.base, -shifted, params.nu, mask),
    )


def _log_norm_masked(m, g, p, mask):
    value = log_exp_norm(m, g, p, mask=mask)
    if math.isnan(value) or value == math.inf:
        raise OverflowGuard(f"log-norm of exponential is not finite (p={p})")
    return value


# ---------------------------------------------------------------------------
# Moment products and psi^{-1}


def _psi_norms(gsm: GroundStateMeasure, r: float, s: float, cap: Optional[float] = None):
    psi = gsm.psi.psi
    mask = gsm.positive
    values = psi if cap is None else np.minimum(psi, cap)
    norm_r = lp_norm(gsm.base, values, r, mask=mask)
    inv = np.where(mask, 1.0 / np.where(mask, values, 1.0), 0.0)
    norm_inv_s = lp_norm(gsm.base, inv, s, mask=mask)
    return norm_r, norm_inv_s


def moment_product_check(
    gsm: GroundStateMeasure,
    r: float,
    s: float,
    params: LsiParams,
    instance: str = "",
    delta: Optional[float] = None,
) -> CheckRecord:
    """``||psi||_r ||psi^{-1}||_s <= ||e^{V-lambda0}||_kappa^{ell(a)+ell(sigma)}``.

    With ``delta`` the local form is checked: psi is capped at delta and the
    potential only counts on ``{psi <= delta}``.
    """
    exponent = K.moment_product_exponent(params, r, s)
    norm_r, norm_inv = _psi_norms(gsm, r, s, cap=delta)
    mask = gsm.positive
    shifted = np.where(mask, gsm.V - gsm.lambda0, 0.0)
    if delta is not None:
        shifted = np.where(gsm.psi.psi <= delta, shifted, 0.0)
    log_norm = _log_norm_masked(gsm.base, shifted, params.kappa, mask)
    eta = params.kappa * log_norm
    name = "moment_product" if delta is None else "moment_product_local"
    detail = {"r": r, "s": s, "exponent": exponent, "eta": eta}
    if delta is not None:
        detail["delta"] = delta
    return log_at_most(name, instance, math.log(norm_r) + math.log(norm_inv), exponent * log_norm, detail=detail)


def psi_inverse_bound_check(
    gsm: GroundStateMeasure,
    s: float,
    params: LsiParams,
    instance: str = "",
    sigma: Optional[float] = None,
) -> list[CheckRecord]:
    """Three upper bounds on ``||psi^{-1}||_s``, from the sharpest input to the coarsest."""
    sigma = K.default_dlsi_parameter(params) if sigma is None else sigma
    a = (2.0 / s + 1.0) * params.c_nu
    ella, ells = K.ell(params, a), K.ell(params, sigma)
    mask = gsm.positive
    log_inv = math.log(lp_norm(gsm.base, gsm.psi_inverse(), s, mask=mask))
    log_kappa, log_nu = log_shifted_norms(gsm, params)
    log_M = log_kappa + log_nu
    sig_s = K.sigma_star(params, s)
    detail = {"s": s, "sigma": sigma, "sigma_s": sig_s}
    return [
        log_at_most("psi_inverse_two_norms", instance, log_inv, (ella + ells) * log_kappa + sigma * log_nu, detail=detail),
        log_at_most("psi_inverse_M", instance, log_inv, (ella + ells + sigma) * log_M, detail=detail),
        log_at_most("psi_inverse_sigma_s", instance, log_inv, sig_s * log_M, detail=detail),
    ]


def psi_norm_bounds(gsm: GroundStateMeasure, params: LsiParams, instance: str = "") -> list[CheckRecord]:
    """Upper bounds on ``||psi||_p`` and lower bounds on ``||psi||_r`` from the nu-norm of e^{lambda0-V}."""
    _, log_nu = log_shifted_norms(gsm, params)
    roots = K.interval_roots(params)
    psi = gsm.psi.psi
    records = []
    mask = gsm.positive
    F = np.where(mask, gsm.F, 0.0)
    psi2logpsi = float(np.sum(-psi * psi * F * gsm.base.weights))
    records.append(at_most("psi_entropy_bound", instance, psi2logpsi, params.c_nu * log_nu))
    for p in (2.5, 3.0, 4.0, 0.5 * (2.0 + min(roots.p0, 20.0))):
        if p < roots.p0:
            lhs = math.log(lp_norm(gsm.base, psi, p))
            records.append(log_at_most("psi_upper_p", instance, lhs, K.tau(params, p) * log_nu, detail={"p": p}))
    for r in (0.25, 0.5, 1.0, 1.5):
        sigma = params.c_nu * (2.0 / r - 1.0)
        lhs = -math.log(lp_norm(gsm.base, psi, r))
        records.append(log_at_most("psi_lower_r", instance, lhs, sigma * log_nu, detail={"r": r}))
    return records


def bounded_psi_checks(
    gsm: GroundStateMeasure,
    c: float,
    osc_V: float,
    instance: str = "",
    ps: Sequence[float] = (2.0, 3.0, 4.0, 6.0),
    rs: Sequence[float] = (0.5, 1.0),
    ss: Sequence[float] = (1.0, 2.0, 4.0),
) -> list[CheckRecord]:
    """Oscillation bounds on ``||psi||_p``, ``||psi||_r``, ``||psi^{-1}||_s`` and the product ``||psi||_r ||psi^{-1}||_s``."""
    bounds = K.bounded_potential_bounds(c, osc_V)
    psi = gsm.psi.psi
    mask = gsm.positive
    records = []
    for p in ps:
        lhs = lp_norm(gsm.base, psi, p, mask=mask)
        records.append(at_most("bounded_psi_upper", instance, lhs, bounds.psi_p_bound(p), detail={"p": p}))
    for r in rs:
        lhs = lp_norm(gsm.base, psi, r, mask=mask)
        records.append(at_most("bounded_psi_lower", instance, bounds.psi_r_lower(r), lhs, detail={"r": r}))
    inv = gsm.psi_inverse()
    for s in ss:
        norm_inv = lp_norm(gsm.base, inv, s, mask=mask)
        records.append(at_most("bounded_psi_inverse", instance, norm_inv, bounds.psi_inv_bound(s), detail={"s": s, "r": 0.5}))
        for r in (r for r in rs if r < 1):
            lhs = lp_norm(gsm.base, psi, r, mask=mask) * norm_inv
            records.append(at_most("bounded_moment_product", instance, lhs, bounds.product_bound(r, s), detail={"s": s, "r": r}))
    return records


# ---------------------------------------------------------------------------
# Distribution of psi


@dataclass(frozen=True)
class DistributionStats:
    eps: float
    K: float
    A_eps: float
    B_eps: float
    C_K: float
    bound_A: float = float("nan")
    bound_B: float = float("nan")
    bound_C: float = float("nan")

    def records(self, instance: str = "") -> list[CheckRecord]:
        detail = {"eps": self.eps, "K": self.K}
        return [
            at_most("distribution_A", instance, self.A_eps, self.bound_A, detail=detail),
            at_most("distribution_B", instance, self.B_eps, self.bound_B, detail=detail),
            at_most("distribution_C", instance, self.C_K, self.bound_C, detail=detail),
        ]


def _distribution_raw(gsm: GroundStateMeasure, eps: float, Kval: float) -> tuple[float, float, float]:
    psi = gsm.psi.psi
    mask = gsm.positive
    w = gsm.base.weights
    low = mask & (psi <= eps)
    A = float(w[low].sum())
    B = float(np.sum(gsm.gradF[low] ** 2 * w[low]))
    high = mask & (psi > Kval)
    C = float(np.sum(psi[high] ** 2 * w[high]))
    return A, B, C


def distribution_stats(
    gsm: GroundStateMeasure, eps: float, K_threshold: float, params: Optional[LsiParams] = None, M: Optional[float] = None
) -> DistributionStats:
    """``A = m(psi <= eps)``, ``B = int_{psi <= eps} |grad F|^2 dm``, ``C = int_{psi > K} psi^2 dm``."""
    if not (0 < eps < 1 < K_threshold):
        raise DomainError("need 0 < eps < 1 < K")
    A, B, C = _distribution_raw(gsm, eps, K_threshold)
    if params is None or M is None:
        return DistributionStats(eps, K_threshold, A, B, C)
    b = params.b_kappa
    a = K.default_dlsi_parameter(params)
    s1 = 1.0 / (b - 0.5)
    alpha1 = a + params.c * K.LOG3 / b
    a_nu = K.interval_roots(params).a_nu
    lever = K.LOG3 / (1.0 / (2.0 * params.c) - 1.0 / params.nu)
    bound_A = (eps * M**alpha1) ** s1
    bound_B = math.sqrt(A) / params.kappa * M**params.kappa
    bound_C = (M**lever / K_threshold**2) ** (a_nu / (2.0 - a_nu))
    return DistributionStats(eps, K_threshold, A, B, C, bound_A, bound_B, bound_C)


def exp_f_squared_integral(gsm: GroundStateMeasure, b: float) -> float:
    """``int e^{b F^2} dm`` over the interior."""
    mask = gsm.positive
    F = np.where(mask, gsm.F, 0.0)
    return float(np.sum(np.where(mask, np.exp(b * F * F), 0.0) * gsm.base.weights))


# ---------------------------------------------------------------------------
# Defective LSI for m_psi


def dlsi_check(
    gsm: GroundStateMeasure,
    a: Optional[float],
    sigma: Optional[float],
    params: LsiParams,
    instance: str = "",
    test_functions: Optional[Sequence[np.ndarray]] = None,
    osc_V: Optional[float] = None,
) -> list[CheckRecord]:
    """Check ``Ent_{m_psi}(u^2) <= 2a int |grad u|^2 dm_psi + D ||u||^2`` for each defect D.

    Defects: from ``||psi^{-1}||_s`` (measured), from the two shifted norms,
    from M alone, from M at ``a = sigma = t*`` (coefficient t*), and, when
    ``osc_V`` is given, the bounded-potential form.
    """
    a = K.default_dlsi_parameter(params) if a is None else a
    sigma = a if sigma is None else sigma
    log_kappa, log_nu = log_shifted_norms(gsm, params)
    log_M = log_kappa + log_nu
    s = K.psi_inverse_index(params, a)
    norm_inv = lp_norm(gsm.base, gsm.psi_inverse(), s, mask=gsm.positive)
    defects = {
        "psi_inverse": K.dlsi_defect_from_psi_inverse(params, a, norm_inv, math.exp(log_nu)),
        "two_norms": K.dlsi_defect_measured(params, a, sigma, math.exp(log_kappa), math.exp(log_nu)),
        "M": 2.0 * K.dlsi_exponent(params, a, sigma) * max(log_M, 0.0),
    }
    t_star = K.ell_fixed_point(params)
    defects["fixed_point"] = 4.0 * t_star * max(log_M, 0.0)
    # Jensen makes every defect nonnegative; clamp rounding below zero.
    defects = {k: max(v, 0.0) for k, v in defects.items()}
    coefficient = {"psi_inverse": a, "two_norms": a, "M": a, "fixed_point": t_star}
    if osc_V is not None:
        bounded = K.bounded_potential_bounds(params.c, osc_V)
        two_a, defect = bounded.dlsi_coeff
        defects["bounded"] = defect
        coefficient["bounded"] = two_a / 2.0
    us = smooth_test_functions(gsm.nodes) if test_functions is None else test_functions
    records = []
    for k, u in enumerate(us):
        ent = entropy(gsm.m_psi, u * u)
        energy = dirichlet_energy(gsm.m_psi, u)
        norm2 = integrate(gsm.m_psi, u * u)
        for name, defect in defects.items():
            rhs = 2.0 * coefficient[name] * energy + defect * norm2
            records.append(
                at_most(
                    f"dlsi_{name}",
                    instance,
                    ent,
                    rhs,
                    detail={"function": k, "defect": defect, "a": coefficient[name]},
                    atol=ENTROPY_ATOL * norm2,
                )
            )
    return records


def lsi_check(
    m: WeightedGridMeasure, coefficient: float, instance: str = "", test_functions=None, check: str = "lsi"
) -> list[CheckRecord]:
    """``Ent_m(u^2) <= 2 coefficient int |grad u|^2 dm`` on a test battery."""
    us = smooth_test_functions(m.nodes) if test_functions is None else test_functions
    records = []
    for k, u in enumerate(us):
        records.append(
            at_most(
                check,
                instance,
                entropy(m, u * u),
                2.0 * coefficient * dirichlet_energy(m, u),
                detail={"function": k},
                atol=ENTROPY_ATOL * integrate(m, u * u),
            )
        )
    return records


# ---------------------------------------------------------------------------
# Consecutive transforms


@dataclass(frozen=True)
class ConsecutiveResult:
    psi: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    lambda_total: float
    lambda1: float
    lambda2: float
    records: tuple


def consecutive_transform_check(
    m: WeightedGridMeasure,
    V1,
    V2,
    params: Optional[LsiParams] = None,
    instance: str = "",
    tol_psi: float = 1e-3,
    tol_lambda: float = 1e-4,
) -> ConsecutiveResult:
    """Compare the direct ground state of ``V1 + V2`` with two transforms in sequence."""
    V1 = np.broadcast_to(np.asarray(V1, dtype=float), m.nodes.shape)
    V2 = np.broadcast_to(np.asarray(V2, dtype=float), m.nodes.shape)
    direct = solve(m, V1 + V2)
    first = solve(m, V1)
    m1 = build_measure(m.grid, first.psi**2 * m.density, normalize=False)
    second = solve(m1, V2)
    product = first.psi * second.psi
    product = product / math.sqrt(integrate(m, product * product) / m.total_mass)
    sup = float(np.abs(direct.psi - product).max())
    dlam = direct.lambda0 - first.lambda0 - second.lambda0
    records = (
        within("consecutive_psi", instance, sup, tol_psi),
        within("consecutive_lambda", instance, dlam, tol_lambda),
    )
    return ConsecutiveResult(direct.psi, first.psi, second.psi, direct.lambda0, first.lambda0, second.lambda0, records)


# ---------------------------------------------------------------------------
# Aida's gap theorem on the grid


@dataclass(frozen=True)
class AidaGapEstimate:
    gamma1: float
    eps: float
    K: float
    log_R: float
    feasible: bool
    stats: Optional[DistributionStats] = None
    diagnostics: dict = field(default_factory=dict)


def aida_gap_estimate(
    gsm: GroundStateMeasure, gamma: float, B: float, D: float, strict: bool = False, max_halvings: int = 200
) -> AidaGapEstimate:
    """Poincaré constant for m_psi from a base Poincaré constant ``gamma`` and a DLSI ``(B, D)``.

    Chooses ``log R = 6 (D + 1/e)`` and searches K upward, then eps downward,
    until ``(2K^2 (2 gamma B_eps + A_eps) + 4 C_K) R^2 <= 1/3``.
    """
    log_R = 6.0 * (D + math.exp(-1.0))
    log_R2 = 2.0 * log_R
    psi = gsm.psi.psi
    positive = np.sort(psi[gsm.positive])
    floor = positive[1] if positive.size > 1 else positive[0]
    log_sixth = math.log(1.0 / 6.0)

    def log_or_neg_inf(x):
        return math.log(x) if x > 0 else -math.inf

    Kval = 2.0
    while True:
        _, _, C = _distribution_raw(gsm, 0.5, Kval)
        if log_or_neg_inf(4.0 * C) + log_R2 <= log_sixth:
            break
        Kval *= 2.0
    eps = 0.5
    for _ in range(max_halvings):
        A, Bv, C = _distribution_raw(gsm, eps, Kval)
        weak = 2.0 * Kval**2 * (2.0 * gamma * Bv + A)
        if log_or_neg_inf(weak) + log_R2 <= log_sixth:
            stats = DistributionStats(eps, Kval, A, Bv, C)
            gamma1 = B + 8.0 * gamma * (Kval / eps) ** 2
            return AidaGapEstimate(gamma1, eps, Kval, log_R, True, stats, {"eps_floor": float(floor)})
        if eps / 2.0 < floor:
            break
        eps /= 2.0
    diagnostics = {"eps_floor": float(floor), "eps_reached": eps, "A_eps": A, "B_eps": Bv, "log_R2": log_R2}
    if strict:
        raise InfeasibleOnGrid(f"grid cannot certify the A360 condition; diagnostics {diagnostics}")
    return AidaGapEstimate(math.inf, eps, Kval, log_R, False, None, diagnostics)


def spectral_gap(gsm: GroundStateMeasure) -> float:
    """Spectral gap of the Dirichlet form operator of m_psi (equals the Schrödinger gap)."""
    from hypercon.grid import ground_state

    return ground_state(dirichlet_operator(gsm.m_psi)).gap
