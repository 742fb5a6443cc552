"""Command line front end.

    hypercon [--config FILE] [--output FILE] [--csv FILE] [--jobs N] COMMAND [WORD ...] [key=value ...]

Commands
  constants  c= kappa= nu= M=            constant report
  solve      instance=NAME [n= I.key=value ...]
             or measure=lebesgue|gaussian [M.omega=] | density_csv=PATH [normalize=]
                potential=zero|harmonic|quartic|expgrowth|polynomial|LIBRARY | potential_csv=PATH
                [V.key=value ...] x_min= x_max= n=
                                          lambda0, gap and a psi summary
  verify     [instance=NAME] n=           bound battery; default is the whole standard battery
  gaussian   [negative|positive]          sharpness experiments (both when no sign is given)
             negative: nu= p1= L= p_control=      positive: omega= a= s=1.9,2.1
  eckmann    NAME [key=value ...]         intermediate state pipeline; NAME is a library
             potential, malrieu_roberto or toy; kappa= n= select the perturbation step
  herbst     instance=NAME g=F|linear points=   Herbst identity curve and entropy envelope
  sweep      COMMAND [WORD ...] key=v1,v2,...   cartesian sweep of any other command

Config files
  {"command": ..., "words": [...], "params": {...}, "jobs": N}; values given on
  the command line win. Numbers must be finite; only kappa and nu accept inf.

Output
  JSON (schema 1) to stdout or --output. Floats are printed with 17 significant
  digits; non-finite values are the strings "nan", "inf", "-inf". Every check
  record carries check, instance, lhs, rhs, slack and ok.
  CSV (--csv, herbst only) has the columns t,value,bound: t is the exponent,
  value is the entropy ratio r(t) and bound is the envelope beta(t) (empty when
  not applicable). --format text prints a flat summary and a PASS/FAIL tally.

Exit codes
  0 success, 2 configuration error, 3 numerical failure, 4 bound violation.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import jsonschema
import numpy as np

from hypercon import constants as K
from hypercon import eckmann as E
from hypercon import instances as I
from hypercon import semigroup as S
from hypercon.errors import ConfigError, HyperconError
from hypercon.grid import NAMED_POTENTIALS, Grid, build_measure, named_measure, named_potential, solve, tabulated_on_grid
from hypercon.records import CheckRecord
from hypercon.verify import herbst_instance, verify_instance

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4
COMMANDS = ("constants", "solve", "verify", "gaussian", "eckmann", "herbst", "sweep")


@dataclass
class Result:
    payload: dict
    records: list = field(default_factory=list)
    csv_rows: Optional[list] = None

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)


# ---------------------------------------------------------------------------
# Deterministic JSON


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def to_plain(obj: Any) -> Any:
    """Convert numpy values, records and dataclasses into JSON-ready Python values."""
    if isinstance(obj, CheckRecord):
        return to_plain(obj.as_dict())
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "as_dict"):
        return to_plain(obj.as_dict())
    return str(obj)


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON with sorted keys and fixed 17-digit floats, so equal inputs give equal bytes."""

    def enc(v, level):
        pad, inner = " " * (indent * level), " " * (indent * (level + 1))
        if isinstance(v, dict):
            if not v:
                return "{}"
            items = [f"{inner}{json.dumps(k)}: {enc(v[k], level + 1)}" for k in sorted(v)]
            return "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(v, list):
            if not v:
                return "[]"
            return "[\n" + ",\n".join(inner + enc(x, level + 1) for x in v) + "\n" + pad + "]"
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return _format_float(v)
        return json.dumps(v)

    return enc(to_plain(obj), 0) + "\n"


# ---------------------------------------------------------------------------
# Argument handling


def parse_value(text: str) -> Any:
    if "," in text:
        return [parse_value(t) for t in text.split(",") if t != ""]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def split_tokens(tokens: list[str]) -> tuple[list[str], dict]:
    words, params = [], {}
    for tok in tokens:
        if "=" in tok:
            key, _, value = tok.partition("=")
            if not key:
                raise ConfigError(f"malformed token {tok!r}")
            params[key] = parse_value(value)
        else:
            words.append(tok)
    return words, params


class _Params:
    """Typed access to key=value parameters that reports unused keys."""

    def __init__(self, params: dict):
        self.params = dict(params)
        self.used: set[str] = set()

    def get(self, key: str, default: Any = None, kind: Callable = float) -> Any:
        self.used.add(key)
        if key not in self.params:
            return default
        value = self.params[key]
        try:
            return kind(value) if kind is not None else value
        except (TypeError, ValueError):
            raise ConfigError(f"parameter {key}={value!r} is not a valid {kind.__name__.strip('_')}") from None

    def prefixed(self, prefix: str) -> dict:
        out = {}
        for key, value in self.params.items():
            if key.startswith(prefix):
                self.used.add(key)
                out[key[len(prefix):]] = value
        return out

    def finish(self) -> None:
        unused = sorted(set(self.params) - self.used)
        if unused:
            raise ConfigError(f"unknown parameters: {', '.join(unused)}")


def _bool(value) -> bool:
    if isinstance(value, bool):
        return value
    raise ValueError("expected true or false")


def _floats(value) -> list[float]:
    values = value if isinstance(value, list) else [value]
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number or a comma separated list, got {value!r}") from None


# ---------------------------------------------------------------------------
# Commands


def cmd_constants(words, p: _Params) -> Result:
    params = K.LsiParams(p.get("c", 0.5), p.get("kappa", 1.0), p.get("nu", 2.0))
    M = p.get("M", 1.0)
    p.finish()
    return Result({"report": K.constants_report(params, M)})


def _instance_kwargs(p: _Params) -> dict:
    kwargs = {}
    n = p.get("n", None, int)
    if n is not None:
        kwargs["n"] = n
    kwargs.update(p.prefixed("I."))
    return kwargs


def cmd_solve(words, p: _Params) -> Result:
    name = p.get("instance", None, str)
    if name is not None:
        inst = I.build(name, **_instance_kwargs(p))
        p.finish()
        m, V, label = inst.measure, inst.V, inst.name
        exact_l, exact_psi = inst.lambda0_exact, inst.psi_exact
    else:
        grid = Grid(p.get("x_min", -8.0), p.get("x_max", 8.0), p.get("n", 4001, int))
        density_csv = p.get("density_csv", None, str)
        if density_csv:
            kind = "tabulated"
            m = build_measure(grid, tabulated_on_grid(density_csv, grid), normalize=p.get("normalize", True, _bool))
            p.prefixed("M.")
        else:
            kind = p.get("measure", "lebesgue", str)
            m = named_measure(kind, grid, **p.prefixed("M."))
        potential_csv = p.get("potential_csv", None, str)
        pot_name = p.get("potential", "zero", str)
        if potential_csv:
            pot_name = "tabulated"
            V = tabulated_on_grid(potential_csv, grid)
            p.prefixed("V.")
        elif pot_name in NAMED_POTENTIALS:
            V = named_potential(pot_name, grid.nodes, **p.prefixed("V."))
        else:
            V = E.named_potential(pot_name, **p.prefixed("V.")).V(grid.nodes)
        p.finish()
        label, exact_l, exact_psi = f"{kind}+{pot_name}", None, None
    gs = solve(m, V)
    psi = gs.psi
    summary = {
        "instance": label,
        "n": m.grid.n,
        "x_min": m.grid.x_min,
        "x_max": m.grid.x_max,
        "lambda0": gs.lambda0,
        "lambda1": gs.lambda1,
        "gap": gs.gap,
        "psi": {
            "max": float(psi.max()),
            "min_interior": float(psi[1:-1].min()),
            "at_center": float(np.interp(0.0, m.nodes, psi)) if m.grid.x_min <= 0 <= m.grid.x_max else math.nan,
            "argmax": float(m.nodes[int(np.argmax(psi))]),
        },
    }
    if exact_l is not None:
        summary["lambda0_error"] = gs.lambda0 - exact_l
    if exact_psi is not None:
        summary["psi_sup_error"] = float(np.abs(psi - exact_psi).max())
    return Result(summary)


def cmd_verify(words, p: _Params) -> Result:
    name = p.get("instance", None, str)
    n = p.get("n", I.DEFAULT_N, int)
    extra = p.prefixed("I.")
    p.finish()
    names = [name] if name else list(I.BATTERY)
    reports = [verify_instance(nm, n=n, **extra) for nm in names]
    records = [r for rep in reports for r in rep.records]
    return Result({"reports": [rep.as_dict() for rep in reports], "ok": all(rep.ok for rep in reports)}, records)


def _blowup_payload(rep: S.BlowupReport) -> dict:
    keys = ("nu", "p1", "p0", "a", "eps", "s1", "s2", "t1", "s_past", "t_past", "log_norm_e_neg_v_nu", "control")
    out = {k: getattr(rep, k) for k in keys}
    out["growth_factors"] = {"initial": rep.growth_initial, "at_t1": rep.growth_at_t1, "past_t1": rep.growth_past}
    out["records"] = [r.as_dict() for r in rep.records]
    out["ok"] = rep.ok
    return out


def cmd_gaussian(words, p: _Params) -> Result:
    signs = [w for w in words if w in ("negative", "positive")]
    if len(signs) != len(words):
        raise ConfigError("gaussian takes the words negative and/or positive")
    signs = signs or ["negative", "positive"]
    payload, records = {}, []
    if "negative" in signs:
        rep = S.blowup_experiment(p.get("nu", 2.0), p.get("p1", 8.0), L=p.get("L", 8.0), p_control=p.get("p_control", 4.0))
        payload["negative"] = _blowup_payload(rep)
        records.extend(rep.records)
    if "positive" in signs:
        omega, a = p.get("omega", 1.0), p.get("a", 3.0)
        out = []
        for s in _floats(p.get("s", [1.9, 2.1], None)):
            rep = S.inverse_moment_experiment(s, omega, a)
            out.append(
                {
                    "s": s,
                    "threshold": rep.threshold,
                    "finite_expected": rep.finite_expected,
                    "log_integral": rep.log_integral,
                    "relative_change_wide": rep.log_change_wide,
                    "growth_double": rep.growth_double,
                    "records": [r.as_dict() for r in rep.records],
                }
            )
            records.extend(rep.records)
        payload["positive"] = {"omega": omega, "a": a, "alpha": math.sqrt(omega * omega + a), "experiments": out}
    p.finish()
    return Result(payload, records)


def cmd_eckmann(words, p: _Params) -> Result:
    if len(words) != 1:
        raise ConfigError("eckmann takes one example name")
    name = words[0]
    if name == "malrieu_roberto":
        rep = E.malrieu_roberto(
            p.get("beta", 1.0), n=p.get("n", 4001, int), L=p.get("L", 8.0), kappa=p.get("kappa", None), reading=p.get("reading", "consistent", str)
        )
        p.finish()
        return Result(rep.as_dict(), rep.records)
    if name == "toy":
        rep = E.toy_model_constants(p.get("dim", 1, int), p.get("lambda", 1.0), p.get("A_norm", 0.0))
        p.finish()
        return Result(rep.as_dict(), rep.records)
    kappa = p.get("kappa", 0.25)
    n = p.get("n", 4001, int)
    x0 = p.get("x0", None)
    kwargs = {k: v for k, v in p.params.items() if k not in ("kappa", "n", "x0")}
    if "lambda" in kwargs:
        kwargs["lam"] = kwargs.pop("lambda")
    if "coeffs" in kwargs:
        kwargs["coeffs"] = tuple(_floats(kwargs["coeffs"]))
    p.used.update(p.params)
    pot = E.named_potential(name, **kwargs)
    if x0 is not None:
        pot = E.Potential(pot.name, pot.V, pot.dV, pot.d2V, pot.even, x0, pot.params)
    x_max = 4.0 if name == "super" else 10.0
    cond = E.check_eckmann_conditions(pot, x_max=x_max)
    state = E.build_intermediate(pot, x_max=x_max) if cond.ok else E.build_second_order(pot, x_max=x_max)
    rep = E.perturbation_step(state, kappa=kappa, n=n)
    state_records = state.records(rep.name)
    payload = rep.as_dict()
    payload["state_records"] = [r.as_dict() for r in state_records]
    return Result(payload, list(rep.records) + state_records)


def cmd_herbst(words, p: _Params) -> Result:
    name = p.get("instance", "gaussian_quadratic", str)
    which = p.get("g", "F", str)
    points = p.get("points", 20, int)
    kwargs = _instance_kwargs(p)
    p.finish()
    inst, curve, roots = herbst_instance(name, which, points, **kwargs)
    bounds = curve.beta.tolist() if curve.beta is not None else [None] * len(curve.t)
    rows = [(float(t), float(r), b) for t, r, b in zip(curve.t, curve.r, bounds)]
    payload = {
        "instance": inst.name,
        "g": which,
        "s0": roots.s0,
        "r0": roots.r0,
        "max_identity_error": curve.max_identity_error,
        "limit_left": curve.limit_left,
        "limit_right": curve.limit_right,
        "mean": curve.mean,
        "curve": [{"t": t, "value": v, "bound": b} for t, v, b in rows],
        "records": [r.as_dict() for r in curve.records],
    }
    return Result(payload, list(curve.records), rows)


HANDLERS = {
    "constants": cmd_constants,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "gaussian": cmd_gaussian,
    "eckmann": cmd_eckmann,
    "herbst": cmd_herbst,
}


def run_job(job: tuple[str, list[str], dict]) -> dict:
    """Run one command; errors become structured entries so sweeps can merge them."""
    command, words, params = job
    try:
        res = HANDLERS[command](words, _Params(params))
    except HyperconError as exc:
        return {"command": command, "words": words, "params": params, "error": _error_dict(exc), "exit_code": exc.exit_code}
    code = EXIT_OK if res.ok else EXIT_VIOLATION
    return {"command": command, "words": words, "params": params, "result": res.payload, "exit_code": code, "ok": res.ok}


def default_jobs() -> int:
    env = os.environ.get("HYPERCON_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"HYPERCON_JOBS={env!r} is not an integer") from None
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return max(1, os.cpu_count() or 1)


def cmd_sweep(words, params: dict, jobs: int) -> tuple[dict, int]:
    if not words or words[0] not in HANDLERS:
        raise ConfigError(f"sweep needs a command from {sorted(HANDLERS)}")
    command, rest = words[0], words[1:]
    keys = sorted(params)
    axes = [params[k] if isinstance(params[k], list) else [params[k]] for k in keys]
    if command == "eckmann" and "coeffs" in params:
        raise ConfigError("coeffs cannot be swept; it is a list already")
    configs = [dict(zip(keys, combo)) for combo in itertools.product(*axes)]
    job_list = [(command, rest, cfg) for cfg in configs]
    if jobs > 1 and len(job_list) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(job_list))) as pool:
            results = list(pool.map(run_job, job_list))
    else:
        results = [run_job(j) for j in job_list]
    code = max((r["exit_code"] for r in results), default=EXIT_OK)
    return {"sweep_command": command, "sweep_words": rest, "grid": {k: a for k, a in zip(keys, axes)}, "results": results}, code


# ---------------------------------------------------------------------------
# Entry point


def _error_dict(exc: BaseException) -> dict:
    out = {"type": type(exc).__name__, "message": str(exc)}
    where = getattr(exc, "where", None)
    if where is not None:
        out["where"] = where
    failed = getattr(exc, "failed", None)
    if failed:
        out["failed"] = list(failed)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hypercon", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", nargs="?", help="one of " + ", ".join(COMMANDS))
    parser.add_argument("tokens", nargs="*", help="words and key=value parameters")
    parser.add_argument("--config", help="JSON file with command, words and params; command-line values win")
    parser.add_argument("--output", help="write the JSON report here instead of stdout")
    parser.add_argument("--csv", help="write curve rows (t,value,bound) here")
    parser.add_argument("--jobs", type=int, help="parallel jobs for sweep (default HYPERCON_JOBS or all cores)")
    parser.add_argument("--format", choices=("json", "text"), default="json", help="report format")
    return parser


CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "words": {"type": "array", "items": {"type": "string"}},
        "params": {
            "type": "object",
            "additionalProperties": {"type": ["number", "string", "boolean", "array"], "items": {"type": ["number", "string"]}},
        },
        "jobs": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}
INFINITE_OK = ("kappa", "nu")


def validate_params(params: dict) -> None:
    """Reject NaN everywhere and infinities outside ``INFINITE_OK``."""
    for key, value in params.items():
        values = value if isinstance(value, list) else [value]
        for v in values:
            if isinstance(v, float) and (math.isnan(v) or (math.isinf(v) and key not in INFINITE_OK)):
                raise ConfigError(f"parameter {key} must be finite, got {v}")


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config {path} does not match the schema: {exc.message}") from None
    return data


def _flatten(obj: Any, prefix: str = "") -> list[tuple[str, Any]]:
    out = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            if k in ("records", "state_records", "curve"):
                continue
            out.extend(_flatten(obj[k], f"{prefix}{k}."))
    elif isinstance(obj, list) and obj and isinstance(obj[0], dict):
        for i, v in enumerate(obj):
            out.extend(_flatten(v, f"{prefix}{i}."))
    else:
        out.append((prefix[:-1], obj))
    return out


def _collect_records(obj: Any) -> list[dict]:
    found = []
    if isinstance(obj, dict):
        if {"check", "lhs", "rhs", "ok"} <= set(obj):
            return [obj]
        for v in obj.values():
            found.extend(_collect_records(v))
    elif isinstance(obj, list):
        for v in obj:
            found.extend(_collect_records(v))
    return found


def render_text(doc: dict) -> str:
    """Flat ``key: value`` summary followed by one line per failed check and a tally."""
    plain = to_plain(doc)
    lines = []
    for key, value in _flatten(plain):
        lines.append(f"{key}: {_format_float(value).strip(chr(34)) if isinstance(value, float) else value}")
    records = _collect_records(plain)
    failed = [r for r in records if not r["ok"]]
    for r in failed:
        lines.append(f"FAIL {r['check']} [{r['instance']}] lhs={r['lhs']!r} rhs={r['rhs']!r}")
    lines.append(f"checks: {len(records) - len(failed)} PASS, {len(failed)} FAIL")
    return "\n".join(lines) + "\n"


def _emit(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_csv(rows: list, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value", "bound"])
        for t, v, b in rows:
            writer.writerow([format(t, ".17g"), format(v, ".17g"), "" if b is None else format(b, ".17g")])


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = None
    try:
        config = _load_config(args.config) if args.config else {}
        tokens = list(args.tokens)
        command = args.command
        if command is not None and "=" in command:
            # Parameters after --config land in the command slot.
            tokens.insert(0, command)
            command = None
        command = command or config.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {', '.join(COMMANDS)}")
        words, params = split_tokens(tokens)
        words = words or list(config.get("words", []))
        merged = dict(config.get("params", {}))
        merged.update(params)
        validate_params(merged)
        jobs = args.jobs if args.jobs is not None else config.get("jobs") or default_jobs()
        if command == "sweep":
            payload, code = cmd_sweep(words, merged, int(jobs))
            rows = None
        else:
            res = HANDLERS[command](words, _Params(merged))
            payload, code, rows = res.payload, (EXIT_OK if res.ok else EXIT_VIOLATION), res.csv_rows
        doc = {"schema": SCHEMA, "command": command, "exit_code": code, **({"result": payload} if command != "sweep" else payload)}
        _emit(render_text(doc) if args.format == "text" else dumps(doc), args.output)
        if args.csv:
            if rows is None:
                raise ConfigError(f"{command} produces no curve for --csv")
            _write_csv(rows, args.csv)
        if code == EXIT_VIOLATION:
            print("hypercon: one or more bound checks failed", file=sys.stderr)
        return code
    except HyperconError as exc:
        doc = {"schema": SCHEMA, "command": command, "exit_code": exc.exit_code, "error": _error_dict(exc)}
        _emit(dumps(doc), args.output)
        print(f"hypercon: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
