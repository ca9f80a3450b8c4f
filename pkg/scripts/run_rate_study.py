#!/usr/bin/env python3
"""Convergence-rate study for the static cosh-filter regularizer.

Writes rates.csv (delta, stopping time T, reconstruction error) plus the
fitted log-log slope for a diagonal source-condition instance. With the
a-priori choice T = delta^(-1/(2 mu + 1)) the slope should sit near
2 mu / (2 mu + 1).
"""

import argparse
import json
import os
import tempfile

from dynareg import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu", type=float, default=0.5,
                    help="source-condition smoothness exponent")
    ap.add_argument("--deltas", default="1e-1,1e-2,1e-3,1e-4",
                    help="comma-separated noise levels")
    ap.add_argument("--seed", type=int, default=6)
    ap.add_argument("--out", default="out/rate-study")
    args = ap.parse_args()

    config = {"kind": "static-rate", "seed": args.seed, "mu": args.mu,
              "deltas": [float(tok) for tok in args.deltas.split(",")]}
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "config.json")
        with open(path, "w") as fh:
            json.dump(config, fh)
        rc = cli.main(["run", "--config", path, "--out", args.out])
    if rc == 0:
        with open(os.path.join(args.out, "rates.csv")) as fh:
            print(fh.read(), end="")
        print(f"artifacts in {args.out}/")
    return rc


if __name__ == "__main__":
    raise SystemExit(main())
