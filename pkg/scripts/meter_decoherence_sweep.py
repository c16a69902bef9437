"""Residual spin coherence after a Gaussian meter, swept over the coupling kappa.

For |+x> coupled through S_z, the grid simulation is compared with the
analytic damping 1/2 exp(-kappa^2 sigma_p^2 / 2). Emits CSV.

    python3 scripts/meter_decoherence_sweep.py --sigma-x 0.5 > sweep.csv
"""

import argparse
import sys
import warnings

import numpy as np

from qergodic.hilbert import BasisSet, Observable, PureState
from qergodic.meter import MeterModel, interact, prepare_by_measurement, reduce_system
from qergodic.serialize import csv_text


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sigma-x", type=float, default=0.5)
    ap.add_argument("--kappa-max", type=float, default=8.0)
    ap.add_argument("--steps", type=int, default=33)
    ap.add_argument("--grid", type=int, default=None, help="grid size (default: auto)")
    args = ap.parse_args(argv)

    sz = Observable([0.5, -0.5], BasisSet(np.eye(2), ("up", "down")))
    plus_x = PureState(np.array([1.0, 1.0]) / np.sqrt(2))
    rows = []
    for kappa in np.linspace(0.0, args.kappa_max, args.steps):
        meter = MeterModel.auto(args.sigma_x, kappa, sz, n=args.grid)
        simulated = abs(reduce_system(interact(plus_x, meter, sz)).matrix[0, 1])
        analytic = 0.5 * np.exp(-0.5 * (kappa * meter.sigma_p) ** 2)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            fidelity = prepare_by_measurement(plus_x, sz, meter, "up").fidelity
        rows.append((kappa, simulated, analytic, abs(simulated - analytic), fidelity))
    header = ("kappa", "residual_coherence", "analytic", "deviation", "up_fidelity")
    sys.stdout.write(csv_text(header, rows))


if __name__ == "__main__":
    main()
