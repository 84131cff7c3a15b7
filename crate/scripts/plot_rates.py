#!/usr/bin/env python3
"""Render the plot data written by `costcap ... --plot-data FILE` as rate-versus-blocklength curves."""

import argparse
import re

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

HEADER = re.compile(r"#\s*(\w+)\s+epsilon=(\S+)")
STYLE = {"converse": "-", "achievability": "--", "normal": ":"}


def read_blocks(path):
    blocks = []
    current = None
    unit = "bits"
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            m = HEADER.match(line)
            if m:
                current = {"name": m.group(1), "epsilon": m.group(2), "n": [], "rate": []}
                blocks.append(current)
            elif line.startswith("n "):
                unit = line.split()[1].removeprefix("rate_")
            elif current is not None:
                n, r = line.split()
                current["n"].append(int(n))
                current["rate"].append(float(r))
    return blocks, unit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data", help="plot data file")
    ap.add_argument("-o", "--output", default="rates.png", help="image file to write")
    ap.add_argument("--capacity", type=float, help="draw a horizontal line at this rate")
    args = ap.parse_args()

    blocks, unit = read_blocks(args.data)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    colors = {}
    for b in blocks:
        if not b["n"]:
            continue
        color = colors.setdefault(b["epsilon"], f"C{len(colors)}")
        ax.plot(b["n"], b["rate"], STYLE.get(b["name"], "-"), color=color, label=f"{b['name']}, eps={b['epsilon']}")
    if args.capacity is not None:
        ax.axhline(args.capacity, color="k", lw=0.8, label="capacity")
    ax.set_xlabel("blocklength n")
    ax.set_ylabel(f"rate ({unit}/channel use)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=150)


if __name__ == "__main__":
    main()
