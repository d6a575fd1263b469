"""Witness table for the three reference deviation states, then witness decay under relaxation."""
import argparse
from pathlib import Path

from qdlab.cli import main as qdlab


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=40)
    ap.add_argument("--dt", type=float, default=0.0557)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    seed = ["--seed", str(args.seed)]
    qdlab(["witness", "--table", *seed])
    out = args.outdir / "witness_dynamics.csv"
    qdlab(["witness", "--bell", "1,-1,1", "--steps", str(args.steps), "--dt", str(args.dt), "--out", str(out), *seed])
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
