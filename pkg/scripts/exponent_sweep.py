"""Print exponent curves (CSV) for the built-in example sources."""

import argparse
import sys

import numpy as np

from zeroerr.exponents import (deterministic_source, exponent_sweep, parity_source,
                               path_source, sweep_csv)

SOURCES = {
    "path": path_source,
    "parity": parity_source,
    "skewed-parity": lambda: deterministic_source([0.5, 0.2, 0.2, 0.1], [0, 1, 0, 1]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("source", choices=sorted(SOURCES))
    ap.add_argument("--max-rate", type=float, default=1.6)
    ap.add_argument("--points", type=int, default=17)
    ap.add_argument("--grid", type=int)
    ap.add_argument("--no-ck", action="store_true", help="skip the expurgated exponent")
    args = ap.parse_args()
    rates = np.linspace(0.0, args.max_rate, args.points)
    rows = exponent_sweep(SOURCES[args.source](), rates, args.grid, not args.no_ck)
    sys.stdout.write(sweep_csv(rows))


if __name__ == "__main__":
    main()
