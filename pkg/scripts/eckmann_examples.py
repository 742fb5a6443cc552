"""Intermediate-state pipeline over the potential library, the Malrieu-Roberto family and the toy model."""

import argparse
from pathlib import Path

from hypercon import eckmann as E
from hypercon.cli import dumps
from hypercon.errors import HyperconError

# The sextic needs 8001 nodes to meet the 1e-4 lambda consistency tolerance.
EXAMPLES = [("power", {"r": 1}), ("power", {"r": 2}), ("power", {"r": 3, "n": 8001}), ("polynomial", {}), ("slow_growth", {}), ("exponential", {}), ("super", {})]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("results/eckmann"))
    parser.add_argument("--kappa", type=float, nargs="+", default=[0.25, 1.0, 3.0])
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    table = []
    for name, kw in EXAMPLES:
        for kappa in args.kappa:
            try:
                rep = E.run_example(name, kappa=kappa, **kw)
                row = {"example": rep.name, "kappa": kappa, "order": rep.state.order, "ok": rep.ok, "lambda0": rep.lambda0, "gap": rep.gap, "M": rep.M}
            except HyperconError as exc:
                row = {"example": name, "kappa": kappa, "error": f"{type(exc).__name__}: {exc}"}
            table.append(row)
            print(row)
    for beta in (0.0, 0.5, 1.0, 1.5):
        for reading in ("consistent", "stated"):
            rep = E.malrieu_roberto(beta, reading=reading)
            table.append({"example": "malrieu_roberto", "beta": beta, "reading": reading, "ok": rep.ok, "M": rep.M, "gap": rep.gap})
            print(table[-1])
    for dim in (1, 10, 1000):
        rep = E.toy_model_constants(dim)
        table.append({"example": "toy", "dim": dim, "ok": rep.ok, "log_c_factor": rep.log_c_factor, "log_c_product": rep.log_c_product})
        print(table[-1])
    (args.out / "examples.json").write_text(dumps(table))


if __name__ == "__main__":
    main()
