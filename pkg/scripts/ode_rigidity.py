"""Tabulate the backward blow-up of J' = -C1 (-t)^{1/2} J^5 against the comparison bound."""

import argparse

import numpy as np

from pinchlab.gaussian import ancient_ode_rigidity


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=5)
    args = ap.parse_args()

    worst = np.inf
    print(f"{'C1':>8s} {'t0':>8s} {'J0':>6s} {'t_min':>12s} {'t_blow':>12s} {'extent':>8s}")
    for C1 in np.geomspace(0.1, 10, args.points):
        for t0 in -np.geomspace(4, 0.25, args.points):
            for J0 in np.geomspace(0.25, 4, args.points):
                r = ancient_ode_rigidity(C1, t0, J0)
                assert r.t_blow_numeric >= r.t_min
                worst = min(worst, r.extent_ratio)
                print(f"{C1:8.3f} {t0:8.3f} {J0:6.3f} {r.t_min:12.5e} {r.t_blow_numeric:12.5e} "
                      f"{r.extent_ratio:8.4f}")
    print(f"smallest extent ratio {worst:.4f}")


if __name__ == "__main__":
    main()
