"""Where delocalization breaks: rotate an anisotropic product so one soft
mode spreads over all coordinates, and the per-coordinate LMC bias picks up
dimension dependence that the unrotated product never shows.

Usage: python scripts/failure_demo.py [--dims 8 32 128] [--h 0.02]
"""

import argparse

from deloc.harness import delocalization_failure_demo


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", type=int, nargs="+", default=[8, 32, 128])
    ap.add_argument("--h", type=float, default=0.02)
    ap.add_argument("--soft", type=float, default=1.0)
    ap.add_argument("--stiff", type=float, default=50.0)
    args = ap.parse_args()

    report = delocalization_failure_demo(
        dims=tuple(args.dims), h=args.h, soft=args.soft, stiff=args.stiff
    )
    print(f"spectrum diag({args.soft}, {args.stiff}, ..., {args.stiff}), h = {args.h}")
    print(f"{'n':>6} {'product max w2sq':>18} {'rotated max w2sq':>18}")
    for n in args.dims:
        prod = report.select(metric="w2sq-marginal-max-product", n=n)[0].value
        rot = report.select(metric="w2sq-marginal-max-rotated", n=n)[0].value
        print(f"{n:>6} {prod:>18.6e} {rot:>18.6e}")

    growth = report.select(metric="rotated-bias-growth")[0]
    spread = report.select(metric="product-bias-variation")[0]
    print(f"\nrotated per-coordinate bias growth n={args.dims[0]} -> n={args.dims[-1]}: "
          f"{growth.value:.2f}x  (needs >= {growth.bound})")
    print(f"product per-coordinate bias variation: {spread.value:.3%}  (stays < {spread.bound:.0%})")
    print("interaction structure, not smoothness, carries the phenomenon: the rotated")
    print("precision matrix is dense, so no sparse certificate applies to it.")


if __name__ == "__main__":
    main()
