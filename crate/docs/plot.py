"""Plot the CSV files written by mimo-sim.

    python docs/plot.py ber-vs-snr.csv mse-vs-w.csv convergence.csv

Writes one PNG next to each CSV. Needs pandas and matplotlib.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

STYLE = {"robust": "-o", "baseline": "--s"}


def label_of(experiment):
    # "ber-vs-snr:w=10" -> "w=10"
    return experiment.split(":", 1)[1] if ":" in experiment else experiment


def plot(path):
    df = pd.read_csv(path)
    sweep = df["sweep_name"].iloc[0]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for (experiment, scheme), g in df.groupby(["experiment", "scheme"], sort=False):
        g = g.sort_values("sweep_value")
        ax.errorbar(
            g["sweep_value"], g["metric"], yerr=g["stderr"], fmt=STYLE.get(scheme, "-"),
            capsize=2, markersize=4, label=f"{scheme} {label_of(experiment)}",
        )
    if sweep == "snr_db":
        ax.set(xlabel="SNR (dB)", ylabel="BER", yscale="log")
    elif sweep == "w":
        ax.set(xlabel="Rician factor W", ylabel="average MSE per user", xscale="log")
    else:
        ax.set(xlabel="iteration", ylabel="average MSE per user")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    out = Path(path).with_suffix(".png")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    print(f"wrote {out}")


if __name__ == "__main__":
    for p in sys.argv[1:]:
        plot(p)
