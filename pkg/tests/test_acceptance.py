"""The eight acceptance criteria, one test each.

Every test records a ``criterion N ... PASS|FAIL`` line; the lines are printed
together at the end of a pytest run (see conftest.py) and directly when this
file is run as a script.
"""

import random
import sys
import warnings

from stick import circuits, contracts
from stick import systems as S
from stick.encoding import DEFAULT, inject_value
from stick.engine import NeuronState, Simulator, evolve_state, predict_crossing
from stick.netlist import Netlist

RESULTS = []
VALUE_KINDS = sorted(set(circuits.BUILDERS) - {"constant", "integrator"})
c = DEFAULT


def report(n, title, ok, detail=""):
    line = f"criterion {n} {title}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    if __name__ == "__main__":
        print(line)
    assert ok, line


def test_criterion_1_circuit_contracts():
    worst, bad = 0.0, []
    for kind in VALUE_KINDS:
        res = contracts.sweep(kind, grid=21)
        worst = max(worst, res.max_time_error)
        if not res.ok:
            bad.append(f"{kind}: {res.failures[0]}")
    report(1, "circuit contracts on a 21-point grid", not bad and worst <= 1e-9,
           f"{len(VALUE_KINDS)} kinds, max error {worst:.2e} s" + (f"; {bad[:2]}" if bad else ""))


def _chain(first, second, x):
    net = Netlist()
    a = net.instantiate(first, "a")
    b = net.instantiate(second, "b")
    net.connect(a["output"], b["input"])
    net.expose(a, "input")
    sim = Simulator(net)
    stim = inject_value(net, "input", x)
    if "recall" in a:
        stim += [(0.5, a.id("recall"), c.w_e), (1.0, b.id("recall"), c.w_e)]
    sim.inject(stim)
    t = sim.run(3.0).times_of(b.id("output"))
    return t[1] - t[0]


def test_criterion_2_inversion_identities():
    worst = 0.0
    for k in range(21):
        x = k / 20
        pairs = [(circuits.build_inverting_memory(), circuits.build_inverting_memory()),
                 (circuits.build_memory(), circuits.build_memory())]
        if x > 0:
            pairs.append((circuits.build_log(), circuits.build_exp()))
        for first, second in pairs:
            worst = max(worst, abs(_chain(first, second, x) - (c.T_min + x * c.T_cod)))
    report(2, "inversion identities", worst <= 1e-9, f"max interval error {worst:.2e} s")


def test_criterion_3_multiplier():
    err = contracts.product_error(11)
    report(3, "multiplier product on 11x11 grid", err < 1e-6, f"max decoded error {err:.2e}")


def test_criterion_4_first_order():
    cfg = S.FirstOrderConfig(tau=1.0, x_inf=0.8, dt=0.5, steps=20)
    trace = S.run_system(S.build_first_order(cfg))
    err = S.max_abs_error(trace, {"x": S.euler_first_order(cfg)})["x"]
    ok = len(trace.values["x"]) == 21 and err <= 1e-4
    report(4, "first-order demo vs Euler", ok, f"21 points, max error {err:.2e}")


def test_criterion_5_second_order():
    errs = {}
    for label, xi in (("overdamped", 1.5), ("underdamped", 0.3)):
        cfg = S.SecondOrderConfig(omega0=1.0, xi=xi, x_inf=0.5, dt=0.2, steps=50)
        trace = S.run_system(S.build_second_order(cfg))
        errs[label] = max(S.max_abs_error(trace, S.euler_second_order(cfg)).values())
        assert len(trace.values["x"]) == 51
    report(5, "second-order demo vs Euler", max(errs.values()) <= 1e-4,
           ", ".join(f"{k} {v:.2e}" for k, v in errs.items()))


def test_criterion_6_lorenz():
    cfg = S.LorenzConfig(steps=50)
    short = S.run_system(S.build_lorenz(cfg))
    err = max(S.max_abs_error(short, S.euler_lorenz(cfg)).values())
    start_ok = all(abs(short.values[v][0] - w) <= 1e-12 for v, w in zip("xyz", (-0.15, -0.20, 0.20)))
    long = S.run_system(S.build_lorenz(S.LorenzConfig(steps=5000)))
    series = list(long.values.values()) + list(long.probes.values())
    peak = max(abs(v) for s in series for v in s)
    xs = long.values["x"]
    # informational only: both wings of the attractor are visited
    lobes = min(xs) < -0.3 and max(xs) > 0.3
    ok = err <= 1e-3 and start_ok and len(xs) == 5001 and peak <= 1
    report(6, "Lorenz demo", ok,
           f"50-step error {err:.2e}, 5000 steps peak |value| {peak:.3f}, two lobes {'yes' if lobes else 'no'}")


def test_criterion_7_neuron_counts():
    lines, ok = [], True
    for name, (cfg_cls, build) in S.SYSTEM_BUILDERS.items():
        rep = build(cfg_cls()).count_report()
        ok = ok and (rep.within_band or rep.itemized)
        band = "in band" if rep.within_band else "outside band, itemized"
        lines.append(f"{name} {rep.total} vs {rep.reference} {band}")
    report(7, "neuron counts", ok, "; ".join(lines))


def _close(a, b, tol=1e-12):
    return all(abs(x - y) <= tol * max(1.0, abs(x), abs(y))
               for x, y in ((a.V, b.V), (a.g_e, b.g_e), (a.g_f, b.g_f))) and a.gate == b.gate


def _bisect(s, horizon=2.0, n=4000):
    f = lambda t: s_v(s, t) - c.model.V_t  # noqa: E731
    prev = 0.0
    for k in range(1, n + 1):
        t = horizon * k / n
        if f(t) >= 0:
            lo, hi = prev, t
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                lo, hi = (lo, mid) if f(mid) >= 0 else (mid, hi)
            return hi
        prev = t
    return None


def s_v(s, t):
    return evolve_state(s, c.model, t).V


def test_criterion_8_engine_properties():
    rng = random.Random(20240611)
    m = c.model
    problems = []
    for _ in range(300):
        s = NeuronState(rng.uniform(-20, 9.9), rng.uniform(-500, 500), rng.uniform(-5e4, 5e4),
                        rng.random() < 0.5)
        t1, t2 = rng.uniform(0, 0.5), rng.uniform(0, 0.5)
        if not _close(evolve_state(evolve_state(s, m, t1), m, t2), evolve_state(s, m, t1 + t2)):
            problems.append("semigroup")
    for _ in range(200):
        # single-drive states, where the first crossing is unambiguous on a grid
        s = (NeuronState(V=rng.uniform(0, 9.5), g_e=rng.uniform(-100, 400)) if rng.random() < 0.5 else
             NeuronState(V=rng.uniform(0, 9.5), g_f=rng.uniform(0, 3e4), gate=True))
        got, want = predict_crossing(s, m), _bisect(s)
        if want is None:
            if got is not None and got < 2.0 - 1e-9:
                problems.append(f"spurious crossing {s}")
        elif got is None or abs(got - want) > 1e-12:
            problems.append(f"crossing {s}: {got} vs {want}")
    logs = []
    for _ in range(2):
        sysm = S.build_lorenz(S.LorenzConfig())
        sim = Simulator(sysm.net)
        sim.inject([(0.0, "init", c.w_e), (0.0, "start", c.w_e)])
        logs.append(sim.run(2.0).to_csv())
    if logs[0] != logs[1]:
        problems.append("nondeterministic log")
    busy = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for kind in sorted(circuits.BUILDERS):
            for xs in contracts.grid_points(kind, 5):
                p = dict(contracts.SWEEP_PARAMS.get(kind, {}))
                if kind == "constant":
                    p["x"] = xs[0]
                got = contracts.measure(kind, xs, **p)
                held = contracts.expected(kind, xs, **p).holding
                busy += bool([n for n in got.quiescent if n not in held])
    if busy:
        problems.append(f"{busy} transactions left neurons away from reset")
    report(8, "engine property suite", not problems,
           "semigroup, crossing, determinism, quiescence" if not problems else "; ".join(problems[:3]))


if __name__ == "__main__":
    failed = 0
    for name, fn in list(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
