"""Case-1 optimum and second-order correction towards the deep double well.

    python3 scripts/semiclassical_scan.py --g 1 --m2 -1 -5 -10 -20 -30
"""

import argparse

from riccati_lpt import analysis


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--g", type=float, default=1.0)
    p.add_argument("--m2", type=float, nargs="+", default=[-1.0, -5.0, -10.0, -20.0, -30.0])
    args = p.parse_args()
    print(f"{'m2':>7} {'E(1)':>18} {'E2':>11} {'E(2) - oracle':>14} {'oracle':>18}")
    for r in analysis.semiclassical_scan(args.g, args.m2):
        if r.error:
            print(f"{r.m2:7.2f}  failed: {r.error}")
            continue
        print(f"{r.m2:7.2f} {r.E1:18.12f} {r.E2:11.2e} {r.oracle_deviation:14.2e} {r.E_oracle:18.12f}")


if __name__ == "__main__":
    main()
