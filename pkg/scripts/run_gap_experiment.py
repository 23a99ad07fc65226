#!/usr/bin/env python3
"""Gap experiment: quasi-regular norms of the generator sum along the FD
tower against the certified bracket at infinity.

The finite-level norms sit at 4 while the infinity-fiber truncation lower
bounds converge to the spectral radius of the 4-regular tree, 2*sqrt(3).
Supplying that value as the external ceiling lets the engine certify the
gap numerically.

Usage:
    python scripts/run_gap_experiment.py [--n-max N] [--radius R] [--out F]
"""

import argparse
import math
import sys

from hlslab.cli import main as hlslab_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-max", type=int, default=3)
    ap.add_argument("--radius", type=int, default=12)
    ap.add_argument("--out", default=None)
    ap.add_argument("--no-ceiling", action="store_true",
                    help="drop the analytic tree ceiling (engine bounds only)")
    args = ap.parse_args()
    argv = ["gap", "--family", "fd",
            "--n-max", str(args.n_max),
            "--radius", str(args.radius)]
    if not args.no_ceiling:
        argv += ["--infinity-ceiling", repr(2 * math.sqrt(3))]
    if args.out:
        argv += ["--out", args.out]
    return hlslab_main(argv)


if __name__ == "__main__":
    sys.exit(main())
