import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stick import systems as S
from stick.engine import Simulator
from stick.netlist import Netlist


def test_first_order_oracle_is_explicit_euler():
    xs = S.euler_first_order(S.FirstOrderConfig())
    assert xs[:4] == pytest.approx([0.0, 0.4, 0.6, 0.7])
    assert len(xs) == 21


def test_second_order_oracle_uses_old_state():
    cfg = S.SecondOrderConfig(omega0=1.0, xi=1.5, x_inf=0.5, dt=0.2)
    o = S.euler_second_order(cfg, steps=2)
    assert o["x"] == pytest.approx([0.0, 0.0, 0.02])
    assert o["v"] == pytest.approx([0.0, 0.1, 0.17])


@given(st.floats(-0.2, 0.2), st.floats(-0.2, 0.2), st.floats(0.05, 0.3))
@settings(max_examples=50)
def test_substitution_matches_physical_euler(x0, y0, z0):
    cfg = S.LorenzConfig(x0=x0, y0=y0, z0=z0)
    sub = S.euler_lorenz(cfg, steps=30)
    phys = S.euler_lorenz_physical(cfg, steps=30)
    scale = {"x": cfg.s_x, "y": cfg.s_y, "z": cfg.s_z}
    for v in "xyz":
        assert [a * scale[v] for a in sub[v]] == pytest.approx(phys[v], abs=1e-9)


def test_lorenz_fixed_points():
    cfg = S.LorenzConfig()
    r = math.sqrt(8.0 / 3.0 * 27.0)
    assert cfg.fixed_points() == [pytest.approx((r / 25, r / 30, 27 / 60)),
                                  pytest.approx((-r / 25, -r / 30, 27 / 60))]
    for x, y, z in cfg.fixed_points():
        k = cfg.coefficients()
        assert k["x"][0] * y + k["x"][1] * x == pytest.approx(0.0, abs=1e-12)
        assert k["y"][0] * x + k["y"][1] * y + k["y"][2] * x * z == pytest.approx(0.0, abs=1e-12)
        assert k["z"][0] * x * y + k["z"][1] * z == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("make", [
    lambda: S.FirstOrderConfig(tau=0.0),
    lambda: S.FirstOrderConfig(x_inf=1.5),
    lambda: S.SecondOrderConfig(omega0=-1.0),
    lambda: S.SecondOrderConfig(xi=-0.1),
])
def test_config_invariants(make):
    with pytest.raises(ValueError):
        make()


def test_first_order_matches_oracle():
    cfg = S.FirstOrderConfig()
    trace = S.run_system(S.build_first_order(cfg))
    assert len(trace.values["x"]) == 21
    assert S.max_abs_error(trace, {"x": S.euler_first_order(cfg)})["x"] <= 1e-4


def test_first_order_equilibrium_and_slow_drift():
    cfg = S.FirstOrderConfig(x_inf=0.3, x0=0.3, steps=5)
    xs = S.run_system(S.build_first_order(cfg)).values["x"]
    assert xs == pytest.approx([0.3] * 6, abs=1e-9)
    cfg = S.FirstOrderConfig(tau=8.0, x_inf=0.8, x0=0.0, dt=0.5, steps=1)
    xs = S.run_system(S.build_first_order(cfg)).values["x"]
    assert abs(xs[1] - xs[0]) == pytest.approx(0.5 * 0.8 / 8.0, abs=1e-9)


def test_zero_steps_gives_initial_value_only():
    cfg = S.FirstOrderConfig(x0=-0.25, steps=0)
    trace = S.run_system(S.build_first_order(cfg))
    assert trace.values["x"] == [pytest.approx(-0.25, abs=1e-12)]


@pytest.mark.parametrize("xi, steps", [(1.5, 50), (0.3, 50), (0.0, 10)])
def test_second_order_matches_oracle(xi, steps):
    cfg = S.SecondOrderConfig(xi=xi, steps=steps, x_inf=0.5 if xi else 0.4)
    trace = S.run_system(S.build_second_order(cfg))
    err = S.max_abs_error(trace, S.euler_second_order(cfg))
    assert len(trace.values["x"]) == steps + 1
    assert max(err.values()) <= 1e-4


def test_second_order_discretely_overdamped_is_monotone():
    # at dt=0.2 the Euler map needs xi above about 2.1 for real eigenvalues;
    # xi=1.5 is overdamped in continuous time but overshoots by ~5% here
    cfg = S.SecondOrderConfig(xi=2.5, steps=40)
    xs = S.run_system(S.build_second_order(cfg)).values["x"]
    assert all(b >= a - 1e-9 for a, b in zip(xs, xs[1:]))
    assert xs[-1] == pytest.approx(0.5, abs=0.02)


def test_second_order_equilibrium():
    cfg = S.SecondOrderConfig(x_inf=0.2, x0=0.2, xdot0=0.0, steps=4)
    trace = S.run_system(S.build_second_order(cfg))
    assert trace.values["x"] == pytest.approx([0.2] * 5, abs=1e-9)
    assert trace.values["v"] == pytest.approx([0.0] * 5, abs=1e-9)


def test_lorenz_short_run():
    cfg = S.LorenzConfig(steps=50)
    trace = S.run_system(S.build_lorenz(cfg))
    assert [trace.values[v][0] for v in "xyz"] == pytest.approx([-0.15, -0.20, 0.20], abs=1e-12)
    err = S.max_abs_error(trace, S.euler_lorenz(cfg))
    assert max(err.values()) <= 1e-3
    # range discipline on everything decoded
    for series in list(trace.values.values()) + list(trace.probes.values()):
        assert all(abs(v) <= 1 for v in series)


def test_step_pacing_one_request_per_cycle():
    sysm = S.build_first_order(S.FirstOrderConfig())
    net = sysm.net
    sim = Simulator(net)
    sim.inject([(0.0, "init", 10.0), (0.0, "start", 10.0)])
    rec = sim.run(6.0)
    ni = rec.times_of(net.id_of("integ.new_input"))
    plus, minus = sysm.outputs["x"]
    firsts = sorted(rec.times_of(plus)[::2] + rec.times_of(minus)[::2])
    assert len(firsts) >= 5
    for a, b in zip(firsts, firsts[1:]):
        assert sum(a <= t < b for t in ni) == 1


def test_counts_are_itemized():
    for name, (cfg_cls, build) in S.SYSTEM_BUILDERS.items():
        rep = build(cfg_cls()).count_report()
        assert rep.reference == S.REFERENCE_COUNTS[name]
        assert sum(n for _, _, n in rep.items) == rep.total
        assert rep.itemized
        assert rep.within_band or rep.itemized
        assert rep.lines()[0].startswith(f"{name}: {rep.total} neurons")


def test_lorenz_uses_the_expected_parts():
    kinds = sorted(k for k, _ in S.build_lorenz(S.LorenzConfig()).net.meta["parts"].values())
    assert kinds == sorted(["lincomb"] * 3 + ["signed-mul"] * 2 + ["signed-sync"] + ["integrator"] * 3)


def test_stall_is_reported():
    with pytest.raises(S.StallError, match="waiting on"):
        S.run_system(S.build_first_order(S.FirstOrderConfig()), watchdog=1e-6)


def test_silent_network_is_a_stall():
    net = Netlist()
    net.add_port("init", net.add_neuron("init"), "input")
    net.add_port("start", net.add_neuron("start"), "input")
    p, m = net.add_neurons("x+", "x-")
    sysm = S.System("dead", net, {"x": (p, m)}, {}, None, 1)
    with pytest.raises(S.StallError, match="silent"):
        S.run_system(sysm, steps=1)


def test_overflow_names_the_signal():
    cfg = S.FirstOrderConfig(tau=0.3, x_inf=1.0, x0=-1.0, dt=0.5, steps=3)
    with pytest.raises(S.RangeError, match="'x'"):
        S.run_system(S.build_first_order(cfg))


def test_trace_csv_formats():
    cfg = S.LorenzConfig(steps=2)
    trace = S.run_system(S.build_lorenz(cfg))
    long = trace.csv_long().splitlines()
    assert long[0] == "step,var,value" and len(long) == 1 + 3 * 3
    wide = trace.csv_wide().splitlines()
    assert wide[0] == "step,x,y,z" and wide[1].startswith("0,-0.15")
