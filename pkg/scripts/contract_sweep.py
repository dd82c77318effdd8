"""Sweep every circuit's timing contract and print one row per kind."""

import argparse
import time

from stick import circuits, contracts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=21)
    ap.add_argument("kinds", nargs="*", default=sorted(circuits.BUILDERS))
    args = ap.parse_args()
    print(f"{'kind':<14}{'points':>7}{'max |err| (s)':>16}{'wall (s)':>10}  result")
    bad = 0
    for kind in args.kinds:
        t0 = time.perf_counter()
        res = contracts.sweep(kind, args.grid)
        wall = time.perf_counter() - t0
        bad += not res.ok
        print(f"{kind:<14}{res.points:>7}{res.max_time_error:>16.3e}{wall:>10.2f}  {'ok' if res.ok else 'FAIL'}")
        for xs, probs in res.failures[:3]:
            print(f"    {xs}: {'; '.join(probs)}")
    g = min(args.grid, 11)
    print(f"multiplier decoded-product error on {g}x{g} grid: {contracts.product_error(g):.3e}")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
