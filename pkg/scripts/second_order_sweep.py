"""Second-order step responses for several damping ratios, network vs Euler."""

import argparse
from pathlib import Path

from stick import plots
from stick import systems as S


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--xis", default="0.3,0.7,1.0,1.5")
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--out", default="out/second_order_sweep.svg")
    args = ap.parse_args()
    series, ref = {}, {}
    for xi in (float(s) for s in args.xis.split(",")):
        cfg = S.SecondOrderConfig(xi=xi, steps=args.steps)
        trace = S.run_system(S.build_second_order(cfg))
        oracle = S.euler_second_order(cfg)
        err = max(S.max_abs_error(trace, oracle).values())
        print(f"xi={xi:<5} max |network - euler| = {err:.2e}  final X = {trace.values['x'][-1]:.4f}")
        series[f"xi={xi}"] = trace.values["x"]
        ref[f"xi={xi}"] = oracle["x"]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(plots.time_series(series, "second order step response", ref))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
