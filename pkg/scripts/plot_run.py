"""Plot the trajectories and accomplishment of a finished run.

    python scripts/plot_run.py runs/case1 --mesh scenarios/meshes/case1.mesh -o case1.png

Needs matplotlib.
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from hedac.geometry import load_mesh


def read_columns(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]} if rows else {}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--mesh", type=Path, help="draw the domain boundary from this mesh")
    parser.add_argument("-o", "--output", type=Path, default=None, help="image file (default: <run_dir>/run.png)")
    args = parser.parse_args(argv)

    traj = read_columns(args.run_dir / "trajectories.csv")
    metrics = read_columns(args.run_dir / "metrics.csv")
    if not traj:
        parser.error(f"{args.run_dir} has no trajectory rows")

    fig, (ax, ax_eta) = plt.subplots(1, 2, figsize=(12, 5), gridspec_kw={"width_ratios": [3, 2]})
    if args.mesh:
        geom, _ = load_mesh(args.mesh)
        for s in geom.segments:
            ax.plot(s[[0, 2]], s[[1, 3]], color="0.3", lw=0.8)
    for agent in np.unique(traj["agent_id"]).astype(int):
        sel = traj["agent_id"] == agent
        ax.plot(traj["x"][sel], traj["y"][sel], lw=0.9, label=f"agent {agent}")
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(fontsize=7, loc="upper right")

    ax_eta.plot(metrics["t"], metrics["eta"])
    ax_eta.set_xlabel("t [s]")
    ax_eta.set_ylabel("accomplishment")
    ax_eta.set_ylim(0, 1)
    fig.tight_layout()

    out = args.output or args.run_dir / "run.png"
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
