"""Watch the convexity quantity G_eps decay on a periodic bump and a neck flow to pinch-off."""

import argparse
import math

import numpy as np

from pinchlab import flow
from pinchlab.constants import convexity_constants


def report(title, states, k):
    series = flow.monitor_convexity([flow.snapshot_of(s) for s in states], k, strict=False)
    print(f"-- {title}: status={series.status}")
    print(f"{'t':>8s} {'max G_eps':>12s} {'min l1/H':>10s}")
    for rec in series.records:
        print(f"{rec.t:8.4f} {rec.max_Geps:12.5e} {rec.min_lambda1_over_H:10.5f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--L", type=float, default=2.0)
    ap.add_argument("--eps", type=float, default=0.01)
    args = ap.parse_args()
    k = convexity_constants(args.n, args.L, args.eps)

    bump = flow.periodic_profile(args.n, lambda x: 1 + 0.05 * np.cos(4 * x), math.pi / 2, 64)
    states, _ = flow.profile_flow_solve(bump, 0.2, every=100)
    report("bump", states, k)

    neck = flow.neumann_profile(args.n, lambda x: 1 - 0.4 * np.exp(-4 * x**2), -2, 2, 61)
    states, reason = flow.profile_flow_solve(neck, 10.0, every=200)
    report(f"neck (stopped: {reason})", states, k)


if __name__ == "__main__":
    main()
