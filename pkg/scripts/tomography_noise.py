"""Reconstruction error of the nine-setting tomography against readout noise."""
import argparse

import numpy as np

from qdlab.nmrsim import simulate_tomography, tomography_reconstruct
from qdlab.qcore import random_traceless_hermitian


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print("noise_sigma,median_max_error,worst_max_error")
    for sigma in (0.0, 1e-6, 1e-4, 1e-2):
        errs = []
        for _ in range(args.trials):
            delta = random_traceless_hermitian(4, rng)
            rec = tomography_reconstruct(simulate_tomography(delta, sigma, rng))
            errs.append(np.max(np.abs(rec.mat - delta)))
        print(f"{sigma:g},{np.median(errs):.3e},{max(errs):.3e}")


if __name__ == "__main__":
    main()
