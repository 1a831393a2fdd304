#!/usr/bin/env python3
"""Plot CSVs written by isac_cli.

    python3 tools/plot_csv.py sweep.csv -o sweep.png
    python3 tools/plot_csv.py pattern.csv -o pattern.png

Sweep CSVs give one curve of mean_objective per design (error bars: std).
Beampattern CSVs give one panel per design with the total, R_d and each T_k.
"""

import argparse
import csv
import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def plot_sweep(rows, ax):
    curves = defaultdict(list)
    for r in rows:
        mean = float(r["mean_objective"])
        if math.isnan(mean):
            continue
        curves[r["design"]].append((float(r["value"]), mean, float(r["std_objective"])))
    for design, pts in sorted(curves.items()):
        pts.sort()
        ax.errorbar([p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", capsize=3,
                    label=design)
    ax.set_xlabel(rows[0]["variable"])
    ax.set_ylabel("mean objective")
    ax.grid(True, alpha=0.3)
    ax.legend()


def plot_pattern(rows, fig):
    designs = sorted({r["design"] for r in rows})
    users = [c for c in rows[0].keys() if c.startswith("T")]
    axes = fig.subplots(len(designs), 1, squeeze=False)[:, 0]
    for ax, design in zip(axes, designs):
        sel = [r for r in rows if r["design"] == design]
        deg = [float(r["theta_deg"]) for r in sel]
        ax.plot(deg, [float(r["total"]) for r in sel], "k-", lw=2, label="total")
        ax.plot(deg, [float(r["R_d"]) for r in sel], "--", label="R_d")
        for u in users:
            ax.plot(deg, [float(r[u]) for r in sel], lw=0.8, label=u)
        ax.set_title(design)
        ax.set_xlabel("angle (deg)")
        ax.set_ylabel("gain")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small", ncol=3)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", required=True)
    args = ap.parse_args()
    rows = read(args.csv)
    if not rows:
        raise SystemExit("empty CSV")
    if "theta_rad" in rows[0]:
        fig = plt.figure(figsize=(8, 3.5 * len({r["design"] for r in rows})))
        plot_pattern(rows, fig)
    else:
        fig, ax = plt.subplots(figsize=(7, 4.5))
        plot_sweep(rows, ax)
    fig.tight_layout()
    fig.savefig(args.out, dpi=120)


if __name__ == "__main__":
    main()
