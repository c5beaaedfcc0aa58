"""Graphs where max_Q kappa exceeds log2 of the chromatic number.

For each size parameter m the graph has 2^m + 1 vertices and chromatic
number 3, while kappa at Q = (1/2, 2^-(m+1), ...) grows like m/2.
"""

import argparse
import math

import numpy as np

from zeroerr.graphs import chromatic_number, tightness_graph
from zeroerr.kappa import kappa


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-m", type=int, default=5)
    args = ap.parse_args()
    print("m,vertices,kappa_at_q,m_over_2,log2_gamma")
    for m in range(2, args.max_m + 1):
        g = tightness_graph(m)
        q = np.array([0.5] + [0.5 / 2**m] * 2**m)
        val = kappa(g, q).value
        print(f"{m},{g.n},{val:.6f},{m / 2:g},{math.log2(chromatic_number(g)):.6f}")


if __name__ == "__main__":
    main()
