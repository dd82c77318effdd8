"""Command line: run netlists, demos, contract sweeps and netlist export.

Exit codes: 0 success, 1 contract or oracle failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

from stick import circuits, contracts, plots, systems
from stick.encoding import EncodingError, WiringError, decoded_trace_csv, inject_value, read_values
from stick.engine import SimulationError, Simulator
from stick.netlist import NetlistError, load_netlist, save_netlist

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _write(path, text: str):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def parse_stimulus(text: str, net) -> list:
    """Rows ``time_s,port,value,sign``.  Sign + or - injects an encoded value;
    sign ``raw`` or empty sends one V event of ``value`` mV (w_e if empty)."""
    events = []
    reader = csv.DictReader(io.StringIO(text))
    need = {"time_s", "port", "value", "sign"}
    if reader.fieldnames is None or not need <= set(reader.fieldnames):
        raise UsageError(f"stimulus header must contain {sorted(need)}")
    for lineno, row in enumerate(reader, start=2):
        try:
            t = float(row["time_s"])
            port = row["port"].strip()
            sign = (row["sign"] or "").strip()
            value = (row["value"] or "").strip()
            if sign in ("+", "-"):
                events += inject_value(net, port, float(value), sign, t0=t)
            elif sign in ("", "raw"):
                w = float(value) if value else net.constants.w_e
                net.resolve(port)
                events.append((t, port, w))
            else:
                raise ValueError(f"unknown sign {sign!r}")
        except (ValueError, EncodingError, WiringError, NetlistError) as exc:
            raise UsageError(f"stimulus line {lineno}: {exc}") from None
    return events


def _output_bases(net) -> list:
    bases = []
    for name, p in net.ports.items():
        if p.dir != "output":
            continue
        base = name[:-1] if name[-1] in "+-" and (name[:-1] + "+") in net.ports else name
        if base not in bases:
            bases.append(base)
    return bases


def cmd_run(args) -> int:
    if not args.t_end > 0:
        raise UsageError("--t-end must be positive")
    try:
        net = load_netlist(args.netlist)
    except NetlistError as exc:
        raise UsageError(f"{args.netlist}: {exc}") from None
    try:
        text = Path(args.stimulus).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.stimulus}: {exc}") from None
    stim = parse_stimulus(text, net)
    sim = Simulator(net)
    sim.inject(stim)
    rec = sim.run(args.t_end)
    if args.out_spikes:
        _write(args.out_spikes, rec.to_csv())
    if args.out_trace:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            streams = {b: read_values(rec, net, b, strict=False) for b in _output_bases(net)}
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        signed = {b for b in streams if b + "+" in net.ports}
        _write(args.out_trace, decoded_trace_csv(streams, signed))
    print(f"{len(rec)} spikes up to t={args.t_end} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# demo
# ---------------------------------------------------------------------------


def _demo_config(args):
    if args.name == "first-order":
        return systems.FirstOrderConfig(tau=args.tau, x_inf=args.xinf, dt=args.dt or 0.5,
                                        steps=args.steps if args.steps is not None else 20,
                                        x0=args.x0)
    if args.name == "second-order":
        return systems.SecondOrderConfig(omega0=args.omega0, xi=args.xi, x_inf=args.xinf,
                                         dt=args.dt or 0.2,
                                         steps=args.steps if args.steps is not None else 50,
                                         x0=args.x0, xdot0=args.xdot0)
    return systems.LorenzConfig(sigma=args.sigma, rho=args.rho, beta=args.beta,
                                dt=args.dt or 0.01,
                                steps=args.steps if args.steps is not None else 5000)


def cmd_demo(args) -> int:
    try:
        cfg = _demo_config(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _, build = systems.SYSTEM_BUILDERS[args.name]
    system = build(cfg)
    trace = systems.run_system(system, cfg.steps)
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from None
    stem = args.name
    _write(out / f"{stem}_trace.csv", trace.csv_long())
    if args.name == "first-order":
        oracle = {"x": systems.euler_first_order(cfg)}
        svg = plots.time_series({"X": trace.values["x"]}, "first order system",
                                {"X": oracle["x"]})
    elif args.name == "second-order":
        oracle = systems.euler_second_order(cfg)
        svg = plots.time_series({"X": trace.values["x"], "dX/dt": trace.values["v"]},
                                "second order system", {"X": oracle["x"], "dX/dt": oracle["v"]})
    else:
        oracle = systems.euler_lorenz(cfg)
        _write(out / f"{stem}_wide.csv", trace.csv_wide())
        v = trace.values
        svg = plots.phase_portrait(v["x"], v["y"], v["z"], "Lorenz system (substituted coordinates)",
                                   cfg.fixed_points(), (cfg.x0, cfg.y0, cfg.z0))
    _write(out / f"{stem}.svg", svg)
    for line in system.count_report().lines():
        print(line)
    err = systems.max_abs_error(trace, oracle)
    tol = 1e-3 if args.name == "lorenz" else 1e-4
    if args.name == "lorenz":
        err = systems.max_abs_error(
            systems.Trace({k: v[:51] for k, v in trace.values.items()}, {}), oracle)
    print("max |network - euler|: " + ", ".join(f"{k}={e:.3e}" for k, e in err.items()))
    print(f"wrote {out / (stem + '_trace.csv')} and {out / (stem + '.svg')}")
    return EXIT_OK if all(e <= tol for e in err.values()) else EXIT_FAIL


# ---------------------------------------------------------------------------
# check / build
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    if args.grid < 2:
        raise UsageError("--grid must be >= 2")
    res = contracts.sweep(args.kind, args.grid)
    ok = res.ok
    print(f"{args.kind}: {res.points} points, max |dT_out - contract| = {res.max_time_error:.3e} s")
    if args.kind == "mul":
        perr = contracts.product_error(args.grid)
        print(f"{args.kind}: max decoded product error = {perr:.3e}")
        ok = ok and perr < 1e-6
    for xs, probs in res.failures[:10]:
        print(f"  FAIL at {xs}: {'; '.join(probs)}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_FAIL


def _parse_floats(s):
    return [float(v) for v in s.split(",") if v.strip()]


def cmd_build(args) -> int:
    params = {}
    if args.kind == "constant":
        params["x"] = args.x
    elif args.kind in ("sync", "signed-sync"):
        params["n"] = args.n
    elif args.kind == "lincomb":
        params["alphas"] = _parse_floats(args.alphas)
    elif args.kind == "integrator":
        params.update(gain=args.gain, x0=args.x0)
    elif args.kind == "sub":
        params["full"] = not args.simple
    if args.kind in systems.SYSTEM_BUILDERS:
        cfg_cls, build = systems.SYSTEM_BUILDERS[args.kind]
        net = build(cfg_cls()).net
    else:
        try:
            net = circuits.build(args.kind, **params)
        except (ValueError, EncodingError) as exc:
            raise UsageError(str(exc)) from None
    try:
        save_netlist(net, args.out)
    except OSError as exc:
        raise UsageError(f"cannot write {args.out}: {exc}") from None
    print(f"{args.kind}: {len(net)} neurons, {len(net.synapses)} synapses -> {args.out}")
    return EXIT_OK


def cmd_counts(args) -> int:
    ok = True
    for name, (cfg_cls, build) in systems.SYSTEM_BUILDERS.items():
        rep = build(cfg_cls()).count_report()
        for line in rep.lines():
            print(line)
        ok = ok and (rep.within_band or rep.itemized)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stick", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="simulate a netlist JSON with a stimulus CSV")
    r.add_argument("--netlist", required=True)
    r.add_argument("--stimulus", required=True)
    r.add_argument("--t-end", type=float, required=True)
    r.add_argument("--out-spikes")
    r.add_argument("--out-trace")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("demo", help="run a differential-equation demo")
    d.add_argument("name", choices=sorted(systems.SYSTEM_BUILDERS))
    d.add_argument("--tau", type=float, default=1.0)
    d.add_argument("--xinf", type=float, default=None)
    d.add_argument("--x0", type=float, default=0.0)
    d.add_argument("--xdot0", type=float, default=0.0)
    d.add_argument("--omega0", type=float, default=1.0)
    d.add_argument("--xi", type=float, default=1.5)
    d.add_argument("--sigma", type=float, default=10.0)
    d.add_argument("--rho", type=float, default=28.0)
    d.add_argument("--beta", type=float, default=8.0 / 3.0)
    d.add_argument("--dt", type=float, default=None)
    d.add_argument("--steps", type=int, default=None)
    d.add_argument("--out-dir", default="out")
    d.set_defaults(func=cmd_demo)

    c = sub.add_parser("check", help="sweep a circuit's timing contract")
    c.add_argument("kind", choices=sorted(circuits.BUILDERS))
    c.add_argument("--grid", type=int, default=21)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("build", help="write a circuit or system netlist as JSON")
    b.add_argument("kind", choices=sorted(circuits.BUILDERS) + sorted(systems.SYSTEM_BUILDERS))
    b.add_argument("--out", required=True)
    b.add_argument("--x", type=float, default=0.5)
    b.add_argument("--n", type=int, default=2)
    b.add_argument("--alphas", default="1,-1")
    b.add_argument("--gain", type=float, default=0.5)
    b.add_argument("--x0", type=float, default=0.0)
    b.add_argument("--simple", action="store_true", help="subtractor without tie detection")
    b.set_defaults(func=cmd_build)

    n = sub.add_parser("counts", help="neuron counts of the demo systems vs the published reference counts")
    n.set_defaults(func=cmd_counts)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if getattr(args, "cmd", None) == "demo" and args.xinf is None:
        args.xinf = 0.8 if args.name == "first-order" else 0.5
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (systems.SystemRunError, SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
