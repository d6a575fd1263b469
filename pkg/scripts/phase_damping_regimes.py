"""Correlations of three Bell-diagonal states under local phase damping.

Writes one CSV per regime to results/ (p, mi, cc, qd, regime, kappa_axis).
"""
import argparse
from pathlib import Path

import numpy as np

from qdlab.channels import pd_trajectory, sudden_change_point
from qdlab.correlations import BellDiagonalParams

STATES = {
    "constant_classical": (0.06, 0.3, 0.33),
    "sudden_change": (1.0, -0.6, 0.6),
    "monotonic": (0.25, 0.25, 0.0),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=100)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    grid = np.linspace(0, 1, args.steps + 1)
    for name, c in STATES.items():
        c = BellDiagonalParams(*c)
        traj = pd_trajectory(c, grid)
        path = args.outdir / f"pd_{name}.csv"
        path.write_text(traj.to_csv())
        p_sc = sudden_change_point(c)
        print(f"{name:<20} regime={traj.regime:<20} p_sc={'none' if p_sc is None else f'{p_sc:.6f}'}  -> {path}")


if __name__ == "__main__":
    main()
