#!/usr/bin/env python3
"""Render learning-curve and toy-trace CSVs to PNG.

The CLI deliberately emits CSV only; plotting stays out of process.

    python scripts/plot_curves.py runs/seed0/learning_curve.csv -o curve.png
    python scripts/plot_curves.py trace.csv --kind toy -o trace.png
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v else float("nan") for v in row] for row in reader]
    cols = {name: [row[i] for row in rows] for i, name in enumerate(header)}
    return header, cols


def plot_learning_curve(path, out):
    header, cols = read_csv(path)
    fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    x = cols["env_steps"]
    for name in header:
        if name.startswith("mean_") and name != "mean_abs_fq_err":
            top.plot(x, cols[name], label=name)
    top.set_ylabel("fulfillment / utility")
    top.set_ylim(-0.05, 1.05)
    top.legend(loc="lower right", fontsize=8)
    for name in ("l_td", "l_fv", "mean_abs_fq_err"):
        if name in cols:
            bottom.plot(x, cols[name], label=name)
    bottom.set_xlabel("environment steps")
    bottom.set_ylabel("loss / error")
    bottom.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def plot_toy_trace(path, out):
    _, cols = read_csv(path)
    fig, ax = plt.subplots(figsize=(7, 4))
    for name in ("f0", "f1", "utility"):
        ax.plot(cols["step"], cols[name], label=name)
    ax.set_xlabel("step")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", type=Path)
    parser.add_argument("--kind", choices=("train", "toy"), default="train")
    parser.add_argument("-o", "--out", type=Path, default=None)
    args = parser.parse_args()
    out = args.out or args.csv.with_suffix(".png")
    if args.kind == "toy":
        plot_toy_trace(args.csv, out)
    else:
        plot_learning_curve(args.csv, out)


if __name__ == "__main__":
    main()
