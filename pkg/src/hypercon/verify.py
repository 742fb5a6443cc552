"""The bound battery for one solved instance, shared by the command line and the tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from hypercon import constants as K
from hypercon import groundstate as G
from hypercon import instances as I
from hypercon import semigroup as S
from hypercon.errors import ConfigError
from hypercon.grid import richardson
from hypercon.records import CheckRecord, all_ok, log_at_most, within

DELTAS = (0.1, 0.5, 1.0)
PSI_TOL = 1e-3
LAMBDA_TOL = 1e-5


@dataclass
class VerifyReport:
    instance: str
    n: int
    lambda0: float
    gap: float
    M: float
    summary: dict
    records: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all_ok(self.records)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.ok]

    def as_dict(self) -> dict:
        return {
            "instance": self.instance,
            "n": self.n,
            "lambda0": self.lambda0,
            "gap": self.gap,
            "M": self.M,
            "summary": self.summary,
            "ok": self.ok,
            "failures": len(self.failures()),
            "records": [r.as_dict() for r in self.records],
        }


def interior_samples(upper: float, count: int = 4, cap: float = 40.0) -> np.ndarray:
    """``count`` equally spaced points strictly inside ``(0, min(upper, cap))``."""
    top = min(upper, cap)
    return np.linspace(0.0, top, count + 2)[1:-1]


def moment_grid_records(gsm: G.GroundStateMeasure, params: K.LsiParams, instance: str, deltas=DELTAS) -> list[CheckRecord]:
    roots = K.moment_roots(params)
    records = []
    for r in interior_samples(roots.r0):
        for s in interior_samples(roots.s0):
            records.append(G.moment_product_check(gsm, r, s, params, instance))
            for d in deltas:
                records.append(G.moment_product_check(gsm, r, s, params, instance, delta=d))
    return records


def logistic_weight(shift: float = 0.0):
    """Bounded ``v(s) = 1/(1 + e^{-(s - shift)})`` and its derivative for the general Aida identity."""

    def v(s):
        return 0.5 * (1.0 + np.tanh(0.5 * (s - shift)))

    def dv(s):
        vs = v(s)
        return vs * (1.0 - vs)

    return v, dv


def identity_records(fine: G.GroundStateMeasure, coarse: G.GroundStateMeasure, instance: str) -> tuple[list[CheckRecord], dict]:
    """WKB (extrapolated, raw value reported) and Aida residuals against ``max(1e-4, 10 h^2)``."""
    tol = G.identity_tolerance(fine.h)
    raw = G.wkb_residual(fine)
    extrapolated = G.wkb_residual_extrapolated(coarse, fine)
    aida = G.aida_identity_residual(fine)
    records = [
        within("wkb_residual", instance, extrapolated, tol, detail={"raw": raw, "extrapolated": True}),
        within("aida_identity", instance, aida, tol),
    ]
    for shift in (0.0, 1.0):
        v, dv = logistic_weight(shift)
        records.append(within("aida_identity_general", instance, G.aida_identity_residual(fine, v, dv), tol, detail={"v": f"logistic(s-{shift})"}))
    levels = np.quantile(fine.F[fine.positive], [0.1, 0.5, 0.9]).tolist() + [0.0]
    records.extend(G.aida_level_sets(fine, levels, instance))
    return records, {"wkb_raw": raw, "wkb_extrapolated": extrapolated, "aida": aida, "tolerance": tol}


def exact_records(inst: I.Instance, gsm: G.GroundStateMeasure, coarse: G.GroundStateMeasure) -> tuple[list[CheckRecord], dict]:
    """Ground state against the closed form.

    lambda0 is compared after Richardson extrapolation (raw error reported);
    psi is compared on the bulk of the base measure.
    """
    records, info = [], {}
    if inst.lambda0_exact is not None:
        err = gsm.lambda0 - inst.lambda0_exact
        extrapolated = richardson(coarse.lambda0, gsm.lambda0) - inst.lambda0_exact
        records.append(within("lambda0_exact", inst.name, extrapolated, LAMBDA_TOL, detail={"raw": err}))
        info["lambda0_error"] = err
        info["lambda0_error_extrapolated"] = extrapolated
    if inst.psi_exact is not None:
        bulk = inst.measure.density >= G.BULK_THRESHOLD * inst.measure.density.max()
        diff = np.abs(gsm.psi.psi - inst.psi_exact)
        records.append(within("psi_exact_bulk", inst.name, float(diff[bulk].max()), PSI_TOL, detail={"sup": float(diff.max())}))
        info["psi_error_sup"] = float(diff.max())
        info["psi_error_bulk"] = float(diff[bulk].max())
    return records, info


WIDENING_BS = (0.5, 1.0)
WIDENING_TOL = 0.01


def exp_f_squared_widening(name: str, n: int, half_width: float = 8.0, bs=WIDENING_BS, **kwargs) -> list[CheckRecord]:
    """Relative change of ``int e^{b F^2} dm`` from half width L to 1.25 L at fixed spacing."""
    records = []
    wide_n = int(round((n - 1) * 1.25)) + 1
    gsms = []
    for L, nodes in ((half_width, n), (1.25 * half_width, wide_n)):
        inst = I.build(name, n=nodes, half_width=L, **kwargs)
        gsms.append(G.transform(inst.measure, inst.V))
    for b in bs:
        narrow, wide = (G.exp_f_squared_integral(g, b) for g in gsms)
        records.append(within("exp_f_squared_stable", name, wide / narrow - 1.0, WIDENING_TOL, detail={"b": b, "L": half_width, "value": narrow}))
    return records


def verify_instance(name: str, n: int = I.DEFAULT_N, **kwargs) -> VerifyReport:
    """Solve the named instance on n and (n+1)/2 nodes and run every applicable check."""
    if n % 2 == 0:
        n += 1
    inst = I.build(name, n=n, **kwargs)
    coarse_inst = I.build(name, n=(n + 1) // 2, **kwargs)
    params = inst.params
    gsm = G.transform(inst.measure, inst.V)
    coarse = G.transform(coarse_inst.measure, coarse_inst.V)
    label = inst.name
    records: list[CheckRecord] = [within("intertwining", label, gsm.intertwining_error, 1e-6)]
    ident, ident_info = identity_records(gsm, coarse, label)
    records.extend(ident)
    exact, exact_info = exact_records(inst, gsm, coarse)
    records.extend(exact)
    cert = G.lambda0_certificate(inst.measure, inst.V, params, gsm.lambda0, label)
    records.extend(cert.records)
    records.extend(moment_grid_records(gsm, params, label))
    roots = K.moment_roots(params)
    for s in interior_samples(roots.s0, 2):
        records.extend(G.psi_inverse_bound_check(gsm, float(s), params, label))
    records.extend(G.psi_norm_bounds(gsm, params, label))
    records.extend(G.dlsi_check(gsm, None, None, params, label, osc_V=inst.osc_V))
    if inst.bounded:
        records.extend(G.bounded_psi_checks(gsm, params.c, inst.osc_V, label))
        records.extend(exp_f_squared_widening(name, n, **kwargs))
    gap = G.spectral_gap(gsm)
    M = max(cert.M, 1.0)
    mt = K.main_theorem_constants(params, M)
    records.append(log_at_most("gap_vs_main_theorem", label, mt.log_gap_bound, math.log(gap), detail={"log_c1_bound": mt.log_c1_bound}))
    summary = {
        "params": {"c": params.c, "kappa": params.kappa, "nu": params.nu},
        "lambda0_certificate": {
            "federbush_lower": cert.federbush_lower,
            "aida_upper": cert.aida_upper,
            "mean_upper": cert.mean_upper,
            "log_M": cert.log_M,
        },
        "identities": ident_info,
        "exact": exact_info,
        "main_theorem": {"log_gap_bound": mt.log_gap_bound, "log_c1_bound": mt.log_c1_bound, "gap": gap},
    }
    return VerifyReport(label, n, gsm.lambda0, gap, cert.M, summary, records)


def herbst_instance(name: str = "gaussian_quadratic", which: str = "F", points: int = 20, **kwargs):
    """Herbst curve on ``[-0.9 r0, -1e-3] U [1e-3, 0.9 s0]`` for ``g = F`` (with the entropy envelope) or ``g = x``.

    Returns ``(instance, curve, roots)``.
    """
    inst = I.build(name, **kwargs)
    params = inst.params
    roots = K.moment_roots(params)
    ts = np.concatenate([np.linspace(-0.9 * roots.r0, -1e-3, points), np.linspace(1e-3, 0.9 * roots.s0, points)])
    gsm = G.transform(inst.measure, inst.V)
    beta = None
    if which == "F":
        g = np.where(gsm.positive, gsm.F, 0.0)
        log_kappa, _ = G.log_shifted_norms(gsm, params)
        beta = S.entropy_envelope(params.kappa * log_kappa, roots.s0, roots.r0)
    elif which == "linear":
        g = inst.measure.nodes.copy()
    else:
        raise ConfigError("g must be F or linear")
    curve = S.herbst_curve(gsm.base, g, ts, beta=beta, instance=f"{inst.name}:{which}")
    return inst, curve, roots
