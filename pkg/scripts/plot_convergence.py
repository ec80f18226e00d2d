"""Plot cumulative error against k from one or more ``convergence.csv`` files.

    python scripts/plot_convergence.py runs/a runs/b --labels plain ada --out oce.png

Needs matplotlib (``pip install -e .[plot]``).
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read(path):
    with open(Path(path) / "convergence.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([int(r["k"]) for r in rows]),
            np.array([float(r["mean_oce"]) for r in rows]),
            np.array([float(r["sd_oce"]) for r in rows]))


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("runs", nargs="+", help="output directories of `online-bls run`")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--out", default="convergence.png")
    p.add_argument("--skip", type=int, default=10, help="leave out the first SKIP steps")
    args = p.parse_args()

    labels = args.labels or [Path(r).name for r in args.runs]
    fig, ax = plt.subplots(figsize=(6, 4))
    for run, label in zip(args.runs, labels):
        k, mean, sd = read(run)
        k, mean, sd = k[args.skip:], mean[args.skip:], sd[args.skip:]
        ax.plot(k, mean, label=label)
        ax.fill_between(k, mean - sd, mean + sd, alpha=0.2)
    ax.set_xlabel("samples seen")
    ax.set_ylabel("cumulative error (OCE)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
