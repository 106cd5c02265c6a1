"""Plot the CSVs written by run_presets.py into PNG figures next to them."""

import argparse
import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from irsisac.experiments import read_csv  # noqa: E402

ROOT = Path(__file__).resolve().parent.parent


def _series(rows, y, method="closed_form"):
    out = defaultdict(list)
    for r in rows:
        if r["method"] == method and r[y] not in ("", "nan"):
            out[r["architecture"]].append((float(r["sweep_value"]), float(r[y])))
    return {k: sorted(v) for k, v in out.items()}


def detection(rows, path):
    fig, ax = plt.subplots()
    for arch, pts in _series(rows, "pd").items():
        ax.plot(*zip(*pts), marker="o", label=arch)
    ax.set(xlabel="N", ylabel="P_D", title="Detection probability, P_FA = 0.01")
    ax.legend()
    fig.savefig(path, dpi=120)


def crb(rows, path):
    fig, ax = plt.subplots()
    for arch, pts in _series(rows, "crb", "optimized").items():
        ax.loglog(*zip(*pts), marker="o", label=arch)
    ax.set(xlabel="N", ylabel="CRB(theta) [rad^2]", title="Minimized angle CRB")
    ax.legend()
    fig.savefig(path, dpi=120)


def isac(rows, path):
    pts = [(float(r["crb"]), float(r["comm_snr_db"])) for r in rows
           if r["feasible"] == "true" and math.isfinite(float(r["crb"]))]
    fig, ax = plt.subplots()
    ax.semilogx(*zip(*sorted(pts)), marker="o")
    ax.set(xlabel="CRB(theta) [rad^2]", ylabel="CU SNR [dB]", title="Sensing/communication frontier")
    fig.savefig(path, dpi=120)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dir", type=Path, default=ROOT / "results")
    args = parser.parse_args(argv)
    for stem, plot in (("detect_sweep", detection), ("crb_sweep", crb), ("isac_region", isac)):
        csv_path = args.dir / f"{stem}.csv"
        if csv_path.exists():
            plot(read_csv(csv_path), csv_path.with_suffix(".png"))
            print(f"wrote {csv_path.with_suffix('.png')}")


if __name__ == "__main__":
    main()
