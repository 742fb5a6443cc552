"""Grid convergence of lambda0 and the WKB residual on the standard battery."""

import argparse

from hypercon import groundstate as G
from hypercon import instances as I
from hypercon.grid import observed_order, richardson

NS = (501, 1001, 2001, 4001)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", nargs="+", default=list(I.BATTERY))
    args = parser.parse_args()
    print("instance,n,lambda0,richardson,observed_order,wkb_raw")
    for name in args.instances:
        gsms = [G.transform(*(lambda inst: (inst.measure, inst.V))(I.build(name, n=n))) for n in NS]
        lams = [g.lambda0 for g in gsms]
        for k, (n, g) in enumerate(zip(NS, gsms)):
            rich = richardson(lams[k - 1], lams[k]) if k else float("nan")
            order = observed_order(*lams[k - 2 : k + 1]) if k >= 2 else float("nan")
            print(f"{name},{n},{g.lambda0:.12g},{rich:.12g},{order:.3f},{G.wkb_residual(g):.3e}")


if __name__ == "__main__":
    main()
