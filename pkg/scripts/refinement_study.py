"""Grid-refinement trends of every empirical constant on one space.

Runs the selected suites and prints, for each recorded trend, the value on
the base time grid, on the doubled grid, and the ratio between them.  A ratio
above 2 marks a constant that the discretization has not resolved.

    python scripts/refinement_study.py --space cycle:128 --suites coarea ks_equivalence wbe
"""

import argparse

from hkbesov.config import RunConfig
from hkbesov.verify import build_context, run_suite


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--space", default="cycle:128")
    ap.add_argument("--suites", nargs="+", default=["coarea", "ks_equivalence", "wbe", "truncation"])
    args = ap.parse_args()
    cfg = RunConfig(space=args.space, suites=args.suites)
    cfg.validate()
    ctx = build_context(cfg)
    print(f"{'suite':>16} {'constant':>28} {'base':>12} {'refined':>12} {'factor':>8}  resolved")
    for name in cfg.suite_list():
        rep = run_suite(name, ctx)
        for key, tr in sorted(rep.trend.items()):
            print(f"{name:>16} {key:>28} {tr['base']:12.5g} {tr['refined']:12.5g} "
                  f"{tr['factor']:8.4f}  {'yes' if tr['resolved'] else 'no'}")


if __name__ == "__main__":
    main()
