"""Monte Carlo run of the colour-or-bin scheme on the parity source."""

import argparse
import json

from zeroerr.exponents import exponent_new, parity_source
from zeroerr.scheme import simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=8)
    ap.add_argument("--rate", type=float, default=0.6)
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    p = parity_source()
    rep = simulate(p, args.n, args.rate, args.trials, args.seed, args.threads)
    out = rep.to_json()
    out.pop("per_type")
    out["exponent_new"] = exponent_new(args.rate, p).to_json()["value"]
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
