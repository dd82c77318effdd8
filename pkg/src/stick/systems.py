"""Differential-equation demos assembled from the circuit library.

Each ``build_*`` returns a :class:`System`: the netlist, the output port of
every state variable and bookkeeping for the neuron-count report.
``run_system`` drives ``init``/``start`` and decodes one value per variable
per integration step.  ``euler_*`` are the reference recurrences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from stick import circuits
from stick.encoding import DEFAULT, CodingConstants, pair_times
from stick.engine import Simulator
from stick.netlist import Netlist, PortBundle

REFERENCE_COUNTS = {"first-order": 118, "second-order": 187, "lorenz": 549}
COUNT_BAND = 0.15


class SystemRunError(RuntimeError):
    pass


class StallError(SystemRunError):
    """No output for a whole watchdog window."""


class RangeError(SystemRunError):
    """A decoded signal left the representable range."""


# ---------------------------------------------------------------------------
# configs
# ---------------------------------------------------------------------------


@dataclass
class FirstOrderConfig:
    tau: float = 1.0
    x_inf: float = 0.8
    dt: float = 0.5
    steps: int = 20
    x0: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        for name in ("x_inf", "x0"):
            if not -1 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} outside [-1, 1]")


@dataclass
class SecondOrderConfig:
    omega0: float = 1.0
    xi: float = 1.5
    x_inf: float = 0.5
    dt: float = 0.2
    steps: int = 50
    x0: float = 0.0
    xdot0: float = 0.0

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError("omega0 must be positive")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")


@dataclass
class LorenzConfig:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.01
    steps: int = 50
    # initial state in substituted coordinates
    x0: float = -0.15
    y0: float = -0.20
    z0: float = 0.20
    # x = s_x * X etc.; the attractor spans about |x|<20, |y|<27, 0<z<48
    s_x: float = 25.0
    s_y: float = 30.0
    s_z: float = 60.0

    def coefficients(self) -> dict:
        dt, sx, sy, sz = self.dt, self.s_x, self.s_y, self.s_z
        return {
            "x": (dt * self.sigma * sy / sx, -dt * self.sigma),  # (Y, X)
            "y": (dt * self.rho * sx / sy, -dt, -dt * sx * sz / sy),  # (X, Y, XZ)
            "z": (dt * sx * sy / sz, -dt * self.beta),  # (XY, Z)
        }

    def fixed_points(self) -> list:
        """C+ and C- of the continuous system, in substituted coordinates."""
        r = math.sqrt(self.beta * (self.rho - 1))
        z = self.rho - 1
        return [(s * r / self.s_x, s * r / self.s_y, z / self.s_z) for s in (1, -1)]


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def euler_first_order(cfg: FirstOrderConfig, steps: Optional[int] = None) -> list:
    steps = cfg.steps if steps is None else steps
    a0, a1 = 1.0 / cfg.tau, -1.0 / cfg.tau
    xs = [cfg.x0]
    for _ in range(steps):
        x = xs[-1]
        xs.append(x + cfg.dt * (a0 * cfg.x_inf + a1 * x))
    return xs


def euler_second_order(cfg: SecondOrderConfig, steps: Optional[int] = None) -> dict:
    steps = cfg.steps if steps is None else steps
    w2 = cfg.omega0 ** 2
    x, v = cfg.x0, cfg.xdot0
    xs, vs = [x], [v]
    for _ in range(steps):
        a = w2 * cfg.x_inf - w2 * x - cfg.xi * cfg.omega0 * v
        x, v = x + cfg.dt * v, v + cfg.dt * a
        xs.append(x)
        vs.append(v)
    return {"x": xs, "v": vs}


def euler_lorenz(cfg: LorenzConfig, steps: Optional[int] = None) -> dict:
    steps = cfg.steps if steps is None else steps
    k = cfg.coefficients()
    x, y, z = cfg.x0, cfg.y0, cfg.z0
    out = {"x": [x], "y": [y], "z": [z]}
    for _ in range(steps):
        dx = k["x"][0] * y + k["x"][1] * x
        dy = k["y"][0] * x + k["y"][1] * y + k["y"][2] * (x * z)
        dz = k["z"][0] * (x * y) + k["z"][1] * z
        x, y, z = x + dx, y + dy, z + dz
        out["x"].append(x)
        out["y"].append(y)
        out["z"].append(z)
    return out


def euler_lorenz_physical(cfg: LorenzConfig, steps: Optional[int] = None) -> dict:
    """Plain Euler on the unscaled equations, for cross-checking the scaling."""
    steps = cfg.steps if steps is None else steps
    x, y, z = cfg.x0 * cfg.s_x, cfg.y0 * cfg.s_y, cfg.z0 * cfg.s_z
    out = {"x": [x], "y": [y], "z": [z]}
    for _ in range(steps):
        x, y, z = (
            x + cfg.dt * cfg.sigma * (y - x),
            y + cfg.dt * (x * (cfg.rho - z) - y),
            z + cfg.dt * (x * y - cfg.beta * z),
        )
        out["x"].append(x)
        out["y"].append(y)
        out["z"].append(z)
    return out


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass
class System:
    name: str
    net: Netlist
    outputs: dict  # var -> (plus neuron id, minus neuron id)
    probes: dict = field(default_factory=dict)  # internal signed signals
    config: object = None
    # largest linear-combination headroom factor; it stretches every cycle
    slowdown: int = 1

    def count_report(self) -> "CountReport":
        parts = self.net.meta.get("parts", {})
        items = [(prefix, kind, n) for prefix, (kind, n) in parts.items()]
        own = len(self.net) - sum(n for _, _, n in items)
        if own:
            items.append(("(system)", "interface", own))
        return CountReport(self.name, len(self.net), REFERENCE_COUNTS.get(self.name), items)


@dataclass
class CountReport:
    system: str
    total: int
    reference: Optional[int]
    items: list  # (instance prefix, circuit kind, neurons)

    @property
    def delta(self) -> Optional[int]:
        return None if self.reference is None else self.total - self.reference

    @property
    def within_band(self) -> bool:
        return self.reference is not None and abs(self.total - self.reference) <= COUNT_BAND * self.reference

    @property
    def itemized(self) -> bool:
        return sum(n for _, _, n in self.items) == self.total and bool(self.items)

    def lines(self) -> list:
        out = [f"{self.system}: {self.total} neurons (reference {self.reference}, delta {self.delta:+d}, "
               f"{100 * self.delta / self.reference:+.0f}%)"]
        for prefix, kind, n in self.items:
            out.append(f"  {prefix:<10} {kind:<14} {n:4d}")
        return out


def _slowdown(net: Netlist) -> int:
    return max([1] + net.meta.get("headrooms", []))


def _link(net: Netlist, src: PortBundle, src_base: str, dst: PortBundle, dst_base: str):
    """Signed coupling: output+ -> input+, output- -> input-."""
    for ch in "+-":
        net.connect(src[src_base + ch], dst[dst_base + ch])


def _fanout(net: Netlist, name: str, targets: list):
    n = net.add_neuron(name)
    for t in targets:
        net.add_synapse(n, t.neuron, "V", net.constants.w_e)
    net.add_port(name, n, "input")


def _constant(net, value, prefix):
    """Constant network for |value|; returns the bundle and the sign."""
    b = net.instantiate(circuits.build_constant(abs(value), net.constants), prefix)
    return b, (-1.0 if value < 0 else 1.0)


def _pair(b: PortBundle, base: str):
    return (b[base + "+"].neuron, b[base + "-"].neuron)


def build_first_order(cfg: FirstOrderConfig, c: CodingConstants = DEFAULT) -> System:
    net = Netlist(constants=c, kind="first-order")
    const, sgn = _constant(net, cfg.x_inf, "const")
    lc = net.instantiate(circuits.build_linear_combination([sgn / cfg.tau, -1.0 / cfg.tau], c), "lc")
    integ = net.instantiate(circuits.build_integrator(cfg.dt, cfg.x0, c), "integ")
    net.connect(const["output"], lc["input0+"])
    _link(net, integ, "output", lc, "input1")
    _link(net, lc, "output", integ, "input")
    net.connect(integ["new_input"], const["recall"])
    _fanout(net, "init", [integ["init"]])
    _fanout(net, "start", [integ["start"]])
    net.validate()
    return System("first-order", net, {"x": _pair(integ, "output")},
                  {"dxdt": _pair(lc, "output")}, cfg, _slowdown(net))


def build_second_order(cfg: SecondOrderConfig, c: CodingConstants = DEFAULT) -> System:
    net = Netlist(constants=c, kind="second-order")
    w2 = cfg.omega0 ** 2
    const, sgn = _constant(net, cfg.x_inf, "const")
    lc = net.instantiate(
        circuits.build_linear_combination([sgn * w2, -w2, -cfg.xi * cfg.omega0], c), "lc"
    )
    iv = net.instantiate(circuits.build_integrator(cfg.dt, cfg.xdot0, c), "int_v")
    ix = net.instantiate(circuits.build_integrator(cfg.dt, cfg.x0, c), "int_x")
    # V_k is parked here until the acceleration for step k is out, so the
    # position update uses V_k and cannot race the next cycle
    hold = net.instantiate(circuits.build_signed_memory(c), "hold_v")
    net.connect(const["output"], lc["input0+"])
    _link(net, ix, "output", lc, "input1")
    _link(net, iv, "output", lc, "input2")
    _link(net, lc, "output", iv, "input")
    _link(net, iv, "output", hold, "input")
    net.connect(lc["start"], hold["recall"])
    _link(net, hold, "output", ix, "input")
    net.connect(ix["new_input"], const["recall"])
    _fanout(net, "init", [iv["init"], ix["init"]])
    _fanout(net, "start", [iv["start"], ix["start"]])
    net.validate()
    return System("second-order", net, {"x": _pair(ix, "output"), "v": _pair(iv, "output")},
                  {"accel": _pair(lc, "output")}, cfg, _slowdown(net))


def build_lorenz(cfg: LorenzConfig, c: CodingConstants = DEFAULT) -> System:
    net = Netlist(constants=c, kind="lorenz")
    k = cfg.coefficients()
    lc_x = net.instantiate(circuits.build_linear_combination(k["x"], c), "lc_x")
    lc_y = net.instantiate(circuits.build_linear_combination(k["y"], c), "lc_y")
    lc_z = net.instantiate(circuits.build_linear_combination(k["z"], c), "lc_z")
    m_xz = net.instantiate(circuits.build_signed_multiplier(c), "mul_xz")
    m_xy = net.instantiate(circuits.build_signed_multiplier(c), "mul_xy")
    sync = net.instantiate(circuits.build_signed_synchronizer(3, c), "sync")
    ints = {
        v: net.instantiate(circuits.build_integrator(1.0, x0, c), f"int_{v}")
        for v, x0 in (("x", cfg.x0), ("y", cfg.y0), ("z", cfg.z0))
    }
    ix, iy, iz = ints["x"], ints["y"], ints["z"]
    # state fan-out
    _link(net, ix, "output", lc_x, "input1")
    _link(net, iy, "output", lc_x, "input0")
    _link(net, ix, "output", lc_y, "input0")
    _link(net, iy, "output", lc_y, "input1")
    _link(net, iz, "output", lc_z, "input1")
    _link(net, ix, "output", m_xz, "input1")
    _link(net, iz, "output", m_xz, "input2")
    _link(net, ix, "output", m_xy, "input1")
    _link(net, iy, "output", m_xy, "input2")
    _link(net, m_xz, "output", lc_y, "input2")
    _link(net, m_xy, "output", lc_z, "input0")
    # derivatives wait for each other, then all integrators step together
    for i, (lc, v) in enumerate(((lc_x, "x"), (lc_y, "y"), (lc_z, "z"))):
        _link(net, lc, "output", sync, f"input{i}")
        _link(net, sync, f"output{i}", ints[v], "input")
    _fanout(net, "init", [b["init"] for b in ints.values()])
    _fanout(net, "start", [b["start"] for b in ints.values()])
    net.validate()
    probes = {
        "dx": _pair(lc_x, "output"), "dy": _pair(lc_y, "output"), "dz": _pair(lc_z, "output"),
        "xz": _pair(m_xz, "output"), "xy": _pair(m_xy, "output"),
    }
    return System("lorenz", net, {v: _pair(b, "output") for v, b in ints.items()}, probes, cfg,
                  _slowdown(net))


SYSTEM_BUILDERS = {
    "first-order": (FirstOrderConfig, build_first_order),
    "second-order": (SecondOrderConfig, build_second_order),
    "lorenz": (LorenzConfig, build_lorenz),
}


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class Trace:
    values: dict  # var -> list of decoded signed values
    times: dict  # var -> list of first-spike times
    probes: dict = field(default_factory=dict)
    sim_time: float = 0.0
    n_spikes: int = 0

    def csv_long(self) -> str:
        lines = ["step,var,value"]
        n = min(len(v) for v in self.values.values())
        for k in range(n):
            for var in self.values:
                lines.append(f"{k},{var},{self.values[var][k]:.12g}")
        return "\n".join(lines) + "\n"

    def csv_wide(self, order=("x", "y", "z")) -> str:
        lines = ["step," + ",".join(order)]
        n = min(len(self.values[v]) for v in order)
        for k in range(n):
            lines.append(f"{k}," + ",".join(f"{self.values[v][k]:.12g}" for v in order))
        return "\n".join(lines) + "\n"


def _decode_signed(rec_times, pair, c, name, strict=True):
    plus = [(a, b, 1.0) for a, b in pair_times(rec_times[pair[0]], name + "+")]
    minus = [(a, b, -1.0) for a, b in pair_times(rec_times[pair[1]], name + "-")]
    out = []
    for t1, t2, s in sorted(plus + minus):
        mag = (t2 - t1 - c.T_min) / c.T_cod
        if strict and not (-1e-9 <= t2 - t1 - c.T_min <= c.T_cod + 1e-9):
            raise RangeError(
                f"signal {name!r} left the representable range at t={t1:.6f} s "
                f"(interval {t2 - t1:.9f} s, magnitude {mag:.6f})"
            )
        out.append((t1, s * min(1.0, max(0.0, mag))))
    return out


def watchdog_window(c: CodingConstants = DEFAULT, slowdown: int = 1) -> float:
    return 10 * c.T_max * slowdown


def run_system(system: System, steps: Optional[int] = None, watchdog: Optional[float] = None,
               spike_budget: Optional[int] = None) -> Trace:
    """Simulate until every state variable has ``steps + 1`` decoded values.

    Raises StallError if a step produces no new output within the watchdog
    window and RangeError if any output or probe leaves [-1, 1].
    """
    net, c = system.net, system.net.constants
    if steps is None:
        steps = getattr(system.config, "steps", 0)
    if steps < 0:
        raise ValueError("steps must be >= 0")
    watchdog = watchdog_window(c, system.slowdown) if watchdog is None else watchdog
    sim = Simulator(net) if spike_budget is None else Simulator(net, spike_budget)
    sim.inject([(0.0, "init", c.w_e), (0.0, "start", c.w_e)])
    need = 2 * (steps + 1)
    watched = {n for pair in system.outputs.values() for n in pair}
    counts = {n: 0 for n in watched}
    last_progress = 0.0
    chunk = c.T_max
    rec = sim.record
    cursor = 0
    done = False
    while not done:
        sim.run(sim.now + chunk)
        entries = rec.entries
        progressed = False
        for t, n in entries[cursor:]:
            if n in counts:
                counts[n] += 1
                progressed = True
                last_progress = t
        cursor = len(entries)
        done = all(counts[p] + counts[m] >= need for p, m in system.outputs.values())
        if done:
            break
        if not progressed and sim.now - last_progress > watchdog:
            stalled = [v for v, (p, m) in system.outputs.items() if counts[p] + counts[m] < need]
            raise StallError(
                f"{system.name}: no output for {watchdog:.3f} s after t={last_progress:.6f} s; "
                f"waiting on {stalled}"
            )
        if sim.pending == 0:
            raise StallError(f"{system.name}: network went silent at t={sim.now:.6f} s")
    # gather per-neuron spike lists once
    wanted = set(watched) | {n for pair in system.probes.values() for n in pair}
    per = {n: [] for n in wanted}
    for t, n in rec.entries:
        if n in per:
            per[n].append(t)
    for n in per:
        # the newest transaction may still be in flight; drop odd tails
        if len(per[n]) % 2:
            per[n] = per[n][:-1]
    values, vtimes = {}, {}
    for var, pair in system.outputs.items():
        dec = _decode_signed(per, pair, c, var)[: steps + 1]
        values[var] = [v for _, v in dec]
        vtimes[var] = [t for t, _ in dec]
    probes = {}
    for name, pair in system.probes.items():
        probes[name] = [v for _, v in _decode_signed(per, pair, c, name)]
    return Trace(values, vtimes, probes, sim.now, len(rec))


def max_abs_error(trace: Trace, oracle: dict) -> dict:
    return {
        v: max((abs(a - b) for a, b in zip(trace.values[v], oracle[v])), default=0.0)
        for v in trace.values
    }
