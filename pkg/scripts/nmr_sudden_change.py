"""Sudden change of discord under the two-qubit NMR relaxation model.

Runs the deviation-matrix trajectory on the m/(4J) readout grid and reports
where the second difference of the discord departs from its background sign.
"""
import argparse
from pathlib import Path

import numpy as np

from qdlab.channels import RelaxationParams, nmr_trajectory, readout_grid, sudden_change_time
from qdlab.correlations import BellDiagonalParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bell", default="1,-0.6,0.6")
    ap.add_argument("--m-max", type=int, default=250)
    ap.add_argument("--out", type=Path, default=Path("results/nmr_sudden_change.csv"))
    args = ap.parse_args()
    c = BellDiagonalParams(*map(float, args.bell.split(",")))
    params = RelaxationParams()
    grid = readout_grid(args.m_max)
    traj = nmr_trajectory(c.deviation(params.epsilon), params, grid)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(traj.to_csv())

    t_sc = sudden_change_time(c, params)
    dt = grid[1] - grid[0]
    d2 = np.diff(traj.column("qd"), 2)
    background = np.sign(np.median(d2))
    odd = np.nonzero(np.sign(d2) == -background)[0] + 1
    print(f"t_sc = {t_sc:.5f} s = {t_sc / dt:.2f} grid steps" if t_sc else "no sudden change for this state")
    print(f"second difference flips sign at grid points {odd.tolist()}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
