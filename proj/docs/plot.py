"""Plot CSV output of swarmk.

    swarmk run --model stickpull-delayed --t-end 100 > traj.csv
    python3 docs/plot.py traj.csv -o traj.png

The first column is the x axis; every other column is drawn against it.
Columns ending in _stderr are drawn as bands around the matching _mean.
"""

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", default=None)
    ap.add_argument("--columns", nargs="*", help="subset of columns to draw")
    ap.add_argument("--logx", action="store_true")
    ap.add_argument("--logy", action="store_true")
    args = ap.parse_args()

    df = pd.read_csv(args.csv)
    x = df.columns[0]
    cols = args.columns or [c for c in df.columns[1:] if not c.endswith("_stderr")]
    fig, ax = plt.subplots(figsize=(7, 4))
    for c in cols:
        ax.plot(df[x], df[c], label=c)
        err = c[: -len("_mean")] + "_stderr" if c.endswith("_mean") else None
        if err in df.columns:
            ax.fill_between(df[x], df[c] - df[err], df[c] + df[err], alpha=0.25)
    ax.set_xlabel(x)
    if args.logx:
        ax.set_xscale("log")
    if args.logy:
        ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out or args.csv.rsplit(".", 1)[0] + ".png", dpi=120)


if __name__ == "__main__":
    main()
