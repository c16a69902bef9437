"""Monte Carlo phase averaging: trace distance to the exact channel versus sample count.

Emits CSV (n, trace_distance, bound) where bound = 5/sqrt(n).

    python3 scripts/mc_convergence.py --dim 4 --seed 7 > mc.csv
"""

import argparse
import sys

import numpy as np

from qergodic.ergodic import PhaseDistribution, phase_average_channel
from qergodic.hilbert import BasisSet, Observable, haar_unitary, random_density
from qergodic.serialize import csv_text


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=4)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 300, 1000, 3000, 10_000, 30_000, 100_000])
    ap.add_argument("--sigma", type=float, default=None, help="Gaussian phase width (default: uniform over 2 pi)")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    obs = Observable(np.arange(args.dim, 0, -1) - 1.0, BasisSet(haar_unitary(args.dim, rng)))
    rho = random_density(args.dim, rng)
    dist = PhaseDistribution.uniform() if args.sigma is None else PhaseDistribution.gaussian(args.sigma)
    exact, _ = phase_average_channel(rho, obs, dist)

    rows = []
    for n in args.sizes:
        mc, _ = phase_average_channel(rho, obs, dist, mode="montecarlo", n=n, seed=args.seed, workers=args.workers)
        rows.append((n, mc.trace_distance(exact), 5 / np.sqrt(n)))
    sys.stdout.write(csv_text(("n", "trace_distance", "bound"), rows))


if __name__ == "__main__":
    main()
