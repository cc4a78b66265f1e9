"""Two-regime heat kernel slopes on the cable gasket.

Small times see one-dimensional cables (alpha/beta = 1/2); large times see
the gasket (alpha/beta = log 3 / log 5).  Prints the fitted slopes against
these targets for a few cable subdivisions.

    python scripts/cable_gasket_regimes.py --level 4 --segments 2 4 8
"""

import argparse

from hkbesov.config import RunConfig
from hkbesov.verify import build_context, run_suite


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--level", type=int, default=4)
    ap.add_argument("--segments", type=int, nargs="+", default=[2, 4, 8])
    args = ap.parse_args()
    print(f"{'segments':>8} {'points':>6} {'slope_small':>11} {'target':>8} {'slope_large':>11} {'target':>8}")
    for seg in args.segments:
        ctx = build_context(RunConfig(space=f"cablegasket:{args.level},{seg}", suites=["hke"]))
        c = run_suite("hke", ctx).constants
        if "slopes" not in c:
            print(f"{seg:8d} {ctx.X.n:6d}  fit unavailable")
            continue
        (s1, s2), (e1, e2) = c["slopes"], c["expected"]
        print(f"{seg:8d} {ctx.X.n:6d} {s1:11.4f} {e1:8.4f} {s2:11.4f} {e2:8.4f}")


if __name__ == "__main__":
    main()
