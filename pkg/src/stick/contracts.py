"""Closed-form timing contracts and a harness that measures them.

``expected(kind, ...)`` gives the contract for one transaction and
``measure(kind, ...)`` runs that transaction on a freshly built circuit.
``sweep`` compares the two over a grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from stick import circuits
from stick.encoding import DEFAULT, CodingConstants, EncodingError, encode, inject_value, read_values
from stick.engine import Simulator

TIME_TOL = 1e-9
MUL_MIN_INPUT = 1e-4  # below this the log stage all but stalls


@dataclass
class Expectation:
    intervals: dict  # output port -> expected interval (s)
    channels: dict = field(default_factory=dict)  # port -> "plus"/"minus"
    indicators: dict = field(default_factory=dict)  # indicator port -> spike count
    latency: Optional[float] = None  # first output spike minus reference spike
    # neurons allowed to stay charged afterwards (state held between cycles)
    holding: tuple = ()


@dataclass
class Measurement:
    intervals: dict
    channels: dict
    indicators: dict
    latency: Optional[float]
    quiescent: list  # names of neurons left away from reset
    n_spikes: int
    extra: dict = field(default_factory=dict)


def _signed(v: float):
    return abs(v), ("-" if v < 0 else "+")


def _chan(v: float) -> str:
    return "minus" if v < 0 else "plus"


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def log_interval(x: float, c: CodingConstants = DEFAULT) -> float:
    return c.T_min + c.model.tau_f * math.log(c.T_cod / (x * c.T_cod))


def exp_interval(x: float, c: CodingConstants = DEFAULT) -> float:
    return c.T_min + c.T_cod * math.exp(-x * c.T_cod / c.model.tau_f)


def mul_interval(x1: float, x2: float, c: CodingConstants = DEFAULT) -> float:
    # dimensionally consistent form: T_min + dTcod1 * dTcod2 / T_cod
    return c.T_min + (x1 * c.T_cod) * (x2 * c.T_cod) / c.T_cod


def expected(kind: str, xs: Sequence[float], c: CodingConstants = DEFAULT, **p) -> Expectation:
    Ts, Tn = c.model.T_syn, c.model.T_neu
    f = lambda x: encode(x, c)  # noqa: E731
    if kind == "constant":
        return Expectation({"output": f(p.get("x", xs[0] if xs else 0.5))})
    if kind == "inv-memory":
        return Expectation({"output": c.T_max - (f(xs[0]) - c.T_min)}, latency=2 * Ts + 2 * Tn)
    if kind == "memory":
        return Expectation({"output": f(xs[0])}, indicators={"ready": 1}, latency=Ts + Tn)
    if kind == "signed-memory":
        v = xs[0]
        return Expectation({"output": f(abs(v))}, channels={"output": _chan(v)},
                           indicators={"ready": 1})
    if kind in ("sync", "signed-sync"):
        outs = {f"output{i}": f(abs(v)) for i, v in enumerate(xs)}
        chans = {f"output{i}": _chan(v) for i, v in enumerate(xs)} if kind == "signed-sync" else {}
        return Expectation(outs, chans, {"sync": 1})
    if kind == "min":
        x1, x2 = xs
        ind = {"smaller1": int(x1 < x2), "smaller2": int(x2 < x1)}
        if x1 == x2:
            ind = {}  # tie: exactly one fires, checked separately
        return Expectation({"output": f(min(x1, x2))}, indicators=ind, latency=2 * Ts + 2 * Tn)
    if kind == "max":
        x1, x2 = xs
        ind = {"larger1": int(x1 > x2), "larger2": int(x2 > x1)}
        if x1 == x2:
            ind = {}
        return Expectation({"output": f(max(x1, x2))}, indicators=ind, latency=Ts + Tn)
    if kind == "sub":
        x1, x2 = xs
        d = f(x1) - f(x2)
        return Expectation({"output": c.T_min + abs(d)}, {"output": "plus" if d >= 0 else "minus"})
    if kind == "lincomb":
        alphas = p.get("alphas", (1.0, -1.0))
        s = sum(a * x for a, x in zip(alphas, xs))
        return Expectation({"output": c.T_min + abs(s) * c.T_cod}, {"output": _chan(s)},
                           indicators={"start": 1})
    if kind == "log":
        return Expectation({"output": log_interval(xs[0], c)})
    if kind == "exp":
        return Expectation({"output": exp_interval(xs[0], c)})
    if kind == "mul":
        return Expectation({"output": mul_interval(xs[0], xs[1], c)})
    if kind == "signed-mul":
        a, b = xs
        return Expectation({"output": mul_interval(abs(a), abs(b), c)},
                           {"output": "minus" if (a < 0) != (b < 0) else "plus"})
    if kind == "integrator":
        gain, x0 = p.get("gain", 0.5), p.get("x0", 0.0)
        out, x = [x0], x0
        for u in xs:
            x = x + gain * u
            out.append(x)
        return Expectation({"output": [f(abs(v)) for v in out]},
                           {"output": [_chan(v) for v in out]},
                           indicators={"new_input": len(out)},
                           holding=("lc.acc1+", "lc.acc1-", "lc.sync"))
    raise KeyError(f"no contract for kind {kind!r}")


# ---------------------------------------------------------------------------
# measurement
# ---------------------------------------------------------------------------

READ_AT = 0.5  # recall time for memories, well after storage completes


def _stimulus(kind, net, xs, c):
    st = []
    if kind == "constant":
        return [(0.0, "recall", c.w_e)], "recall"
    if kind in ("inv-memory", "memory"):
        return inject_value(net, "input", xs[0]) + [(READ_AT, "recall", c.w_e)], "recall"
    if kind == "signed-memory":
        m, s = _signed(xs[0])
        return inject_value(net, "input", m, s) + [(READ_AT, "recall", c.w_e)], None
    if kind in ("sync", "signed-sync"):
        for i, v in enumerate(xs):
            m, s = _signed(v)
            st += inject_value(net, f"input{i}", m, s if kind == "signed-sync" else "+", t0=0.03 * i)
        return st, None
    if kind in ("mul", "signed-mul") and any(abs(v) < MUL_MIN_INPUT for v in xs):
        raise EncodingError(f"multiplier inputs must satisfy |x| >= {MUL_MIN_INPUT}, got {tuple(xs)}")
    if kind in ("min", "max", "sub", "mul"):
        st = inject_value(net, "input1", xs[0]) + inject_value(net, "input2", xs[1])
        return st, "input1"
    if kind == "signed-mul":
        for i, v in enumerate(xs):
            m, s = _signed(v)
            st += inject_value(net, f"input{i + 1}", m, s)
        return st, None
    if kind == "lincomb":
        for i, v in enumerate(xs):
            m, s = _signed(v)
            st += inject_value(net, f"input{i}", m, s, t0=0.01 * i)
        return st, None
    if kind in ("log", "exp"):
        return inject_value(net, "input", xs[0]), "input"
    raise KeyError(kind)


def _output_ports(net) -> list:
    names = set()
    for name, port in net.ports.items():
        if port.dir == "output":
            names.add(name[:-1] if name[-1] in "+-" else name)
    return sorted(names)


def measure(kind: str, xs: Sequence[float], c: CodingConstants = DEFAULT,
            t_end: float = 20.0, net=None, **p) -> Measurement:
    if kind == "integrator":
        return _measure_integrator(xs, c, t_end, net=net, **p)
    if net is None:
        if kind in ("sync", "signed-sync"):
            p.setdefault("n", len(xs))
        net = circuits.build(kind, c, **p)
    stim, ref_port = _stimulus(kind, net, xs, c)
    sim = Simulator(net)
    sim.inject(stim)
    rec = sim.run(t_end)
    intervals, channels, firsts = {}, {}, {}
    for port in _output_ports(net):
        vals = read_values(rec, net, port, strict=False)
        if len(vals) == 1:
            intervals[port] = vals[0].interval
            channels[port] = vals[0].sign
            firsts[port] = vals[0].spike_times[0]
        else:
            intervals[port] = [v.interval for v in vals]
            channels[port] = [v.sign for v in vals]
    indicators = {
        name: len(rec.times_of(pt.neuron)) for name, pt in net.ports.items() if pt.dir == "indicator"
    }
    latency = None
    if ref_port is not None and "output" in firsts:
        ref = rec.times_of(net.resolve(ref_port))
        if ref:
            latency = firsts["output"] - ref[0]
    extra = {"first_spikes": firsts}
    return Measurement(intervals, channels, indicators, latency, sim.quiescent(), len(rec), extra)


def _measure_integrator(us, c, t_end, net=None, gain=0.5, x0=0.0):
    """Closed loop: feed u_k each time new_input asks for it."""
    if net is None:
        net = circuits.build_integrator(gain, x0, c)
    sim = Simulator(net)
    sim.inject([(0.0, "init", c.w_e), (0.0, "start", c.w_e)])
    ni = net.resolve("new_input")
    fed = 0
    while True:
        seen = len(sim.record.times_of(ni))
        if seen > fed and fed < len(us):
            t = sim.record.times_of(ni)[fed]
            m, s = _signed(us[fed])
            sim.inject(inject_value(net, "input", m, s, t0=max(t, sim.now)))
            fed += 1
        if sim.pending == 0 or sim.now >= t_end:
            break
        sim.run(min(t_end, sim.now + c.T_max))
    rec = sim.record
    vals = read_values(rec, net, "output", strict=False)
    return Measurement(
        {"output": [v.interval for v in vals]},
        {"output": [v.sign for v in vals]},
        {"new_input": len(rec.times_of(ni))},
        None,
        sim.quiescent(),
        len(rec),
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    kind: str
    points: int
    max_time_error: float
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def compare(exp: Expectation, got: Measurement, tol: float = TIME_TOL) -> tuple:
    """(max interval error, list of problems)."""
    err, problems = 0.0, []
    for port, want in exp.intervals.items():
        have = got.intervals.get(port)
        want_l = want if isinstance(want, list) else [want]
        have_l = have if isinstance(have, list) else ([] if have is None else [have])
        if len(want_l) != len(have_l):
            problems.append(f"{port}: expected {len(want_l)} values, got {len(have_l)}")
            continue
        for w, h in zip(want_l, have_l):
            err = max(err, abs(w - h))
        if port in exp.channels:
            wc = exp.channels[port]
            if wc != got.channels.get(port):
                problems.append(f"{port}: channel {got.channels.get(port)} != {wc}")
    for name, n in exp.indicators.items():
        if got.indicators.get(name) != n:
            problems.append(f"indicator {name}: {got.indicators.get(name)} spikes, expected {n}")
    if exp.latency is not None:
        if got.latency is None or abs(got.latency - exp.latency) > tol:
            problems.append(f"latency {got.latency} != {exp.latency}")
    busy = [n for n in got.quiescent if n not in exp.holding]
    if busy:
        problems.append(f"not quiescent: {busy[:4]}")
    if err > tol:
        problems.append(f"interval error {err:.3e} s")
    return err, problems


# builder parameters that keep every grid point in range
SWEEP_PARAMS = {"lincomb": {"alphas": (1.0, -1.0)}, "integrator": {"gain": 1.0 / 3.0}}


def grid_points(kind: str, grid: int = 21) -> list:
    g = [i / (grid - 1) for i in range(grid)] if grid > 1 else [0.5]
    pos = [x for x in g if x > 0]
    signed = sorted({-x for x in pos} | set(g))
    if kind in ("constant", "inv-memory", "memory", "exp"):
        return [(x,) for x in g]
    if kind == "log":
        return [(x,) for x in pos]
    if kind == "signed-memory":
        return [(v,) for v in signed]
    if kind in ("min", "max", "sub"):
        return list(itertools.product(g, g))
    if kind == "mul":
        return list(itertools.product(pos, pos))
    if kind == "signed-mul":
        sg = sorted({-x for x in pos} | set(pos))
        return [(a, b) for a, b in itertools.product(sg, sg)]
    if kind == "sync":
        return [(x, 1 - x) for x in g] + [(x, x, 0.5) for x in g]
    if kind == "signed-sync":
        return [(v, -v if v else 0.0) for v in signed] + [(v, 0.5, -0.25) for v in signed]
    if kind == "lincomb":
        # alphas (1, -1): pairs of signed inputs with |x1 - x2| <= 1
        return [(a, b) for a, b in itertools.product(signed, signed) if abs(a - b) <= 1]
    if kind == "integrator":
        return [tuple([u] * 3) for u in signed]
    raise KeyError(kind)


def sweep(kind: str, grid: int = 21, c: CodingConstants = DEFAULT, **p) -> SweepResult:
    pts = grid_points(kind, grid)
    for k, v in SWEEP_PARAMS.get(kind, {}).items():
        p.setdefault(k, v)
    failures, worst = [], 0.0
    net = None
    if kind not in ("constant", "sync", "signed-sync", "integrator"):
        net = circuits.build(kind, c, **p)
    for xs in pts:
        q = dict(p)
        if kind == "constant":
            q["x"] = xs[0]
        if kind in ("sync", "signed-sync"):
            q["n"] = len(xs)
        exp = expected(kind, xs, c, **q)
        got = measure(kind, xs, c, net=net, **q)
        err, probs = compare(exp, got)
        if kind in ("min", "max") and xs[0] == xs[1]:
            names = ("smaller1", "smaller2") if kind == "min" else ("larger1", "larger2")
            if sum(got.indicators.get(n, 0) for n in names) != 1:
                probs.append("tie: exactly one indicator must fire")
        worst = max(worst, err)
        if probs:
            failures.append((xs, probs))
    return SweepResult(kind, len(pts), worst, failures)


def product_grid(n: int = 11) -> list:
    """n x n points on (0, 1]: k/n for k = 1..n."""
    g = [k / n for k in range(1, n + 1)]
    return list(itertools.product(g, g))


def product_error(n: int = 11, c: CodingConstants = DEFAULT) -> float:
    """Max |decoded multiplier output - x1*x2| over ``product_grid(n)``."""
    net = circuits.build_multiplier(c)
    worst = 0.0
    for x1, x2 in product_grid(n):
        got = measure("mul", (x1, x2), c, net=net)
        decoded = (got.intervals["output"] - c.T_min) / c.T_cod
        worst = max(worst, abs(decoded - x1 * x2))
    return worst
