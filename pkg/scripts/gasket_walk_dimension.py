"""Estimate volume and walk dimensions of the Sierpinski gasket across levels.

Fits the on-diagonal heat kernel slope -alpha/beta away from the corners and
the volume growth slope, then compares beta_hat = alpha_hat / (alpha/beta)
and alpha / (alpha/beta) with
log 5 / log 2.

    python scripts/gasket_walk_dimension.py --levels 3 4 5 6
"""

import argparse
import math

from hkbesov.config import RunConfig
from hkbesov.verify import build_context, run_suite


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[3, 4, 5, 6])
    args = ap.parse_args()
    alpha = math.log(3) / math.log(2)
    print(f"reference: alpha = {math.log(3) / math.log(2):.4f}, beta = {math.log(5) / math.log(2):.4f}")
    print(f"{'level':>5} {'points':>6} {'alpha_hat':>9} {'-slope':>8} {'beta_hat':>8} {'alpha/slope':>11} {'residual':>9}")
    for level in args.levels:
        ctx = build_context(RunConfig(space=f"gasket:{level}", suites=["hke"]))
        hke = run_suite("hke", ctx).constants
        vol = run_suite("volume", ctx).constants
        a_hat = vol.get("alpha2_hat", math.nan)
        aob = -hke["slopes"][0] if "slopes" in hke else math.nan
        b_hat = a_hat / aob if aob > 0 else math.nan
        b_ref = alpha / aob if aob > 0 else math.nan
        print(f"{level:5d} {ctx.X.n:6d} {a_hat:9.4f} {aob:8.4f} {b_hat:8.4f} {b_ref:11.4f} {hke.get('residual', math.nan):9.2e}")


if __name__ == "__main__":
    main()
