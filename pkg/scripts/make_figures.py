"""Write y0, y1 and y1/y0 samples for the case-1 optimum and plot them if
matplotlib is available.

    python3 scripts/make_figures.py --m2 -1 --g 2 --out figures/
"""

import argparse
from pathlib import Path

import numpy as np

from riccati_lpt import cli


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--m2", type=float, default=-1.0)
    p.add_argument("--g", type=float, default=2.0)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--out", default="figures")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data = cli.figure_data(args.m2, args.g, args.x_max, args.points)
    np.savetxt(out / "figure_data.csv", np.column_stack([data["x"], data["y0"], data["y1"], data["y1_over_y0"]]),
               delimiter=",", header="x,y0,y1,y1_over_y0", comments="")
    print(f"parameters: {data['params']}")
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not installed; wrote CSV only")
        return
    for key in ("y0", "y1", "y1_over_y0"):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(data["x"], data[key])
        ax.set_xlabel("x")
        ax.set_ylabel(key.replace("_over_", "/"))
        ax.set_title(f"m2={args.m2:g}, g={args.g:g}")
        fig.tight_layout()
        fig.savefig(out / f"{key}.png", dpi=120)
        plt.close(fig)
    print(f"wrote plots to {out}/")


if __name__ == "__main__":
    main()
