"""Quiver plot of a field.csv written by `gradfield export-field`.

usage: python3 tools/plot_field.py runs/benchmark_implicit_phi/field.csv out.png
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main(src, dst):
    df = pd.read_csv(src)
    has_oracle = "score1" in df.columns
    fig, axes = plt.subplots(1, 2 if has_oracle else 1, figsize=(11 if has_oracle else 6, 5),
                             squeeze=False)
    axes[0][0].quiver(df.x1, df.x2, df.psi1, df.psi2)
    axes[0][0].set_title("network field")
    if has_oracle:
        axes[0][1].quiver(df.x1, df.x2, df.score1, df.score2)
        axes[0][1].set_title("analytic smoothed score")
    for ax in axes[0]:
        ax.set_aspect("equal")
    fig.tight_layout()
    fig.savefig(dst, dpi=120)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
