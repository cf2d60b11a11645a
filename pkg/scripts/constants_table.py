"""Print the pinching constant c_n and the derived planarity constants for a range of n."""

import argparse

from pinchlab import constants as pc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=12)
    ap.add_argument("--eps0", type=float, default=0.01)
    args = ap.parse_args()

    print(f"{'n':>3s} {'c_n':>10s} {'exact':>8s} {'c0':>10s} {'sigma':>10s} {'log C0':>10s}")
    for n in range(2, args.n_max + 1):
        k = pc.planarity_constants(n, args.eps0)
        print(f"{n:3d} {k.c_n:10.6f} {str(pc.cn_exact(n)):>8s} {k.c0:10.6f} "
              f"{k.sigma:10.6f} {k.log_C0:10.3f}{'  *' if k.extended else ''}")
    print("* extended low-dimension regime")
    a2, a3, val = pc.young_optimizer()
    print(f"Young optimum: a2={a2:.6f} a3={a3:.6f} F={val:.6f}")


if __name__ == "__main__":
    main()
