"""Run the randomized verification suites and print a per-suite summary table."""

import argparse
import time

from pinchlab import suites


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--group", default="all", help="suite name or group (identities, inequalities, ...)")
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-max", type=int, default=8)
    ap.add_argument("--m-max", type=int, default=3)
    args = ap.parse_args()

    ns, ms = range(2, args.n_max + 1), range(1, args.m_max + 1)
    failed = 0
    print(f"{'suite':32s} {'worst':>12s} {'viol':>6s} {'time[s]':>8s}")
    for name in suites.resolve(args.group):
        start = time.perf_counter()
        results = suites.run_suite(name, ns, ms, args.samples, args.seed)
        worst = max(r.max_residual for r in results)
        viol = sum(len(r.violations) for r in results)
        failed += viol
        print(f"{name:32s} {worst:12.3e} {viol:6d} {time.perf_counter() - start:8.2f}")
    raise SystemExit(2 if failed else 0)


if __name__ == "__main__":
    main()
