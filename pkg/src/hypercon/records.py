"""Check records shared by the verification modules and the command line."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Optional

# One-sided inequalities are accepted up to this relative rounding allowance.
ONE_SIDED_RTOL = 1e-6


@dataclass(frozen=True)
class CheckRecord:
    check: str
    instance: str
    lhs: float
    rhs: float
    ok: bool
    detail: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    def as_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["slack"] = self.slack
        detail = out.pop("detail")
        if detail:
            out["detail"] = detail
        return out


def at_most(
    check: str,
    instance: str,
    lhs: float,
    rhs: float,
    rtol: float = ONE_SIDED_RTOL,
    detail: Optional[dict] = None,
    atol: float = 0.0,
) -> CheckRecord:
    """Record for ``lhs <= rhs`` with a relative allowance of ``rtol`` plus ``atol``."""
    allowance = rtol * max(abs(rhs), abs(lhs), 1e-300) + atol
    ok = bool(lhs <= rhs + allowance) or (math.isinf(rhs) and rhs > 0)
    return CheckRecord(check, instance, float(lhs), float(rhs), ok, dict(detail or {}))


def log_at_most(
    check: str,
    instance: str,
    log_lhs: float,
    log_rhs: float,
    rtol: float = ONE_SIDED_RTOL,
    detail: Optional[dict] = None,
) -> CheckRecord:
    """``lhs <= rhs`` compared through logarithms; stores the logs as lhs and rhs."""
    ok = bool(log_lhs <= log_rhs + math.log1p(rtol))
    info = {"log_space": True}
    info.update(detail or {})
    return CheckRecord(check, instance, float(log_lhs), float(log_rhs), ok, info)


def within(check: str, instance: str, error: float, tol: float, detail: Optional[dict] = None) -> CheckRecord:
    """Record for ``|error| <= tol``."""
    return CheckRecord(check, instance, float(abs(error)), float(tol), bool(abs(error) <= tol), dict(detail or {}))


def all_ok(records: Iterable[CheckRecord]) -> bool:
    return all(r.ok for r in records)


def worst(records: Iterable[CheckRecord]) -> Optional[CheckRecord]:
    records = list(records)
    if not records:
        return None
    return min(records, key=lambda r: r.slack)
