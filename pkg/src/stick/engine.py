"""Exact event-driven simulation of STICK neurons.

Each neuron integrates

    tau_m dV/dt = g_e + gate * g_f,      tau_f dg_f/dt = -g_f,      dg_e/dt = 0

between synaptic events, so its state can be advanced in closed form and the
next threshold crossing predicted analytically.  The simulator only touches a
neuron when an event reaches it.

Timing convention: a neuron that crosses threshold at ``t`` is reset at ``t``,
its spike is stamped ``t + T_neu`` and each outgoing synapse delivers at
``t + T_neu + delay``.  Events landing inside ``[t, t + T_neu)`` act on the
reset state.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, NamedTuple, Optional, Sequence

from scipy.optimize import brentq

if TYPE_CHECKING:
    from stick.netlist import Netlist

# Event kinds.  FIRE is internal: a predicted threshold crossing.
V, GE, GF, GATE, FIRE = 0, 1, 2, 3, 4
KIND_CODES = {"V": V, "ge": GE, "gf": GF, "gate": GATE}
KIND_NAMES = {code: name for name, code in KIND_CODES.items()}

# Potentials within this distance below V_t count as at threshold.  Absorbs
# float noise when weights like w_e / N are summed back to V_t.
THRESHOLD_TOL = 1e-9
# Saturating g_f drives whose asymptote is within this relative distance of
# V_t never cross (they approach it from below for finite time).
ASYMPTOTE_RTOL = 1e-12
TIME_XTOL = 1e-15
DEFAULT_SPIKE_BUDGET = 10**7


class SimulationError(RuntimeError):
    pass


class RunawayError(SimulationError):
    """Spike budget exhausted, usually a miswired feedback loop."""


@dataclass(frozen=True)
class ModelConstants:
    tau_m: float = 100.0
    tau_f: float = 0.020
    V_t: float = 10.0
    V_reset: float = 0.0
    T_syn: float = 1e-3
    T_neu: float = 10e-6

    def __post_init__(self):
        if not (self.tau_m > 0 and self.tau_f > 0):
            raise ValueError("time constants must be positive")
        if not self.V_t > self.V_reset:
            raise ValueError("V_t must exceed V_reset")
        if not self.T_syn > 0 or self.T_neu < 0:
            raise ValueError("need T_syn > 0 and T_neu >= 0")

    @property
    def w_e(self) -> float:
        return self.V_t - self.V_reset

    @property
    def w_i(self) -> float:
        return -self.w_e


@dataclass
class NeuronState:
    V: float = 0.0
    g_e: float = 0.0
    g_f: float = 0.0
    gate: bool = False
    t_last: float = 0.0

    def is_reset(self, c: ModelConstants, tol: float = 1e-9) -> bool:
        return (
            abs(self.V - c.V_reset) <= tol
            and abs(self.g_e) <= tol
            and abs(self.g_f) <= tol
            and not self.gate
        )


class Event(NamedTuple):
    time: float
    seq: int
    target: int
    kind: int
    weight: float


@dataclass
class SpikeRecord:
    """Time-ordered firings.  ``names`` maps neuron id to hierarchical name."""

    entries: list = field(default_factory=list)
    names: Sequence[str] = ()

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def times_of(self, neuron: int) -> list:
        return [t for t, n in self.entries if n == neuron]

    def to_csv(self) -> str:
        lines = ["time_s,neuron_id,neuron_name"]
        for t, n in self.entries:
            name = self.names[n] if n < len(self.names) else ""
            lines.append(f"{t:.9f},{n},{name}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# closed-form single-neuron dynamics
# ---------------------------------------------------------------------------


def voltage_after(s: NeuronState, c: ModelConstants, dt: float) -> float:
    v = s.V + s.g_e * dt / c.tau_m
    if s.gate and s.g_f != 0.0:
        v += c.tau_f * s.g_f / c.tau_m * -math.expm1(-dt / c.tau_f)
    return v


def evolve_state(s: NeuronState, c: ModelConstants, dt: float) -> NeuronState:
    """State after ``dt`` seconds with no intervening events."""
    if dt < 0:
        raise ValueError(f"cannot evolve backwards (dt={dt})")
    if dt == 0:
        return replace(s)
    return NeuronState(
        V=voltage_after(s, c, dt),
        g_e=s.g_e,
        g_f=s.g_f * math.exp(-dt / c.tau_f),
        gate=s.gate,
        t_last=s.t_last + dt,
    )


def predict_crossing(s: NeuronState, c: ModelConstants) -> Optional[float]:
    """Smallest ``dt >= 0`` with ``V(t_last + dt) >= V_t``, or None.

    Pure ``g_e`` drive is inverted linearly and pure gated ``g_f`` drive
    logarithmically; when both act, the root is bracketed around the single
    extremum of ``V`` and refined with Brent's method.
    """
    gap = c.V_t - s.V
    if gap <= THRESHOLD_TOL:
        return 0.0
    ge = s.g_e
    gf = s.g_f if s.gate else 0.0
    if gf == 0.0:
        if ge <= 0.0:
            return None
        return gap * c.tau_m / ge
    amp = c.tau_f * gf / c.tau_m  # total rise of V from g_f alone
    if ge == 0.0:
        if amp <= gap * (1.0 + ASYMPTOTE_RTOL):
            return None
        return -c.tau_f * math.log1p(-gap / amp)
    return _mixed_crossing(s, c, gap, ge, gf, amp)


def _mixed_crossing(s, c, gap, ge, gf, amp):
    def f(t):
        return s.g_e * t / c.tau_m + amp * -math.expm1(-t / c.tau_f) - gap

    # dV/dt = (ge + gf e^{-t/tau_f}) / tau_m changes sign at most once
    t_ext = None
    if ge * gf < 0:
        r = -ge / gf
        if 0 < r < 1:
            t_ext = -c.tau_f * math.log(r)
    if ge > 0:
        lo = t_ext if (gf < 0 and t_ext is not None) else 0.0
        # linear part alone closes the gap by this time; g_f adds >= -|amp|
        hi = max(lo, (gap + max(0.0, -amp)) * c.tau_m / ge) * 1.0001 + 1e-12
        while f(hi) < 0:
            hi *= 2
        if f(lo) >= 0:
            return lo
        return brentq(f, lo, hi, xtol=TIME_XTOL, rtol=4 * 2**-52)
    # ge < 0: V rises while g_f dominates, then falls for good
    if gf <= 0 or t_ext is None:
        return None
    if f(t_ext) < 0:
        return None
    return brentq(f, 0.0, t_ext, xtol=TIME_XTOL, rtol=4 * 2**-52)


def apply_event(s: NeuronState, kind: int, weight: float) -> NeuronState:
    s = replace(s)
    if kind == V:
        s.V += weight
    elif kind == GE:
        s.g_e = _cancel(s.g_e + weight, weight)
    elif kind == GF:
        s.g_f = _cancel(s.g_f + weight, weight)
    elif kind == GATE:
        s.gate = weight > 0
    else:
        raise ValueError(f"unknown event kind {kind!r}")
    return s


def _cancel(total: float, weight: float) -> float:
    # additive cancellation of equal-and-opposite drives should land on 0
    return 0.0 if abs(total) <= 1e-12 * abs(weight) else total


# ---------------------------------------------------------------------------
# simulator
# ---------------------------------------------------------------------------


class Simulator:
    """Stateful run over one netlist.  ``run`` may be called repeatedly with
    increasing horizons; stimulus can be added between calls."""

    def __init__(self, net: "Netlist", spike_budget: int = DEFAULT_SPIKE_BUDGET):
        self.net = net
        self.c = net.constants.model
        n = len(net.neurons)
        self.names = [nm for nm in net.neurons]
        self.fanout = [[] for _ in range(n)]
        for syn in net.synapses:
            self.fanout[syn.src].append((syn.dst, KIND_CODES[syn.kind], syn.weight, syn.delay))
        self.states = [NeuronState() for _ in range(n)]
        self._version = [0] * n
        self._queue: list = []
        self._seq = 0
        self.now = 0.0
        self.record = SpikeRecord(names=self.names)
        self.spike_budget = spike_budget
        self._spike_counts = Counter()
        self._n_spikes = 0

    # -- stimulus -----------------------------------------------------------

    def push(self, time: float, target: int, kind: int, weight: float):
        if time < self.now:
            raise ValueError(f"event at {time} is in the past (now={self.now})")
        heapq.heappush(self._queue, (time, self._seq, target, kind, weight))
        self._seq += 1

    def inject(self, stimulus: Iterable):
        """``stimulus``: (time, port-name or neuron id, V-weight) triples."""
        for time, port, weight in sorted(stimulus, key=lambda e: e[0]):
            if time < 0:
                raise ValueError("stimulus times must be >= 0")
            self.push(time, self.net.resolve(port), V, weight)

    # -- main loop ----------------------------------------------------------

    def run(self, t_end: float) -> SpikeRecord:
        c = self.c
        tau_m, tau_f, v_t = c.tau_m, c.tau_f, c.V_t
        q = self._queue
        states = self.states
        version = self._version
        pop = heapq.heappop
        while q and q[0][0] <= t_end:
            t, _, n, kind, w = pop(q)
            self.now = t
            s = states[n]
            if kind == FIRE:
                if w != version[n]:
                    continue
                s = self._advance(s, t, tau_m, tau_f)
                states[n] = s
                self._fire(n, t)
                continue
            s = self._advance(s, t, tau_m, tau_f)
            if kind == V:
                s.V += w
            elif kind == GE:
                s.g_e = _cancel(s.g_e + w, w)
            elif kind == GF:
                s.g_f = _cancel(s.g_f + w, w)
            else:
                s.gate = w > 0
            version[n] += 1
            if s.V >= v_t - THRESHOLD_TOL:
                self._fire(n, t)
                continue
            if s.g_e > 0 or (s.gate and s.g_f > 0):
                dt = predict_crossing(s, c)
                if dt is not None:
                    heapq.heappush(q, (t + dt, self._seq, n, FIRE, version[n]))
                    self._seq += 1
        if t_end != math.inf:
            self.now = max(self.now, t_end)
        return self.record

    @staticmethod
    def _advance(s, t, tau_m, tau_f):
        dt = t - s.t_last
        if dt > 0:
            s.V += s.g_e * dt / tau_m
            if s.g_f != 0.0:
                x = -dt / tau_f
                if s.gate:
                    s.V -= tau_f * s.g_f / tau_m * math.expm1(x)
                s.g_f *= math.exp(x)
            s.t_last = t
        return s

    def _fire(self, n: int, t: float):
        c = self.c
        s = self.states[n]
        s.V, s.g_e, s.g_f, s.gate, s.t_last = c.V_reset, 0.0, 0.0, False, t
        self._version[n] += 1
        t_spike = t + c.T_neu
        self.record.entries.append((t_spike, n))
        self._spike_counts[n] += 1
        self._n_spikes += 1
        if self._n_spikes > self.spike_budget:
            hot, count = self._spike_counts.most_common(1)[0]
            raise RunawayError(
                f"spike budget {self.spike_budget} exceeded; hottest neuron "
                f"{self.names[hot]!r} fired {count} times"
            )
        q = self._queue
        for dst, kind, w, delay in self.fanout[n]:
            heapq.heappush(q, (t_spike + delay, self._seq, dst, kind, w))
            self._seq += 1

    # -- inspection -----------------------------------------------------------

    def state_at(self, neuron: int, t: Optional[float] = None) -> NeuronState:
        s = self.states[neuron]
        t = self.now if t is None else t
        return evolve_state(s, self.c, max(0.0, t - s.t_last))

    def quiescent(self, tol: float = 1e-9) -> list:
        """Names of neurons not back at their reset state."""
        return [
            self.names[i]
            for i in range(len(self.states))
            if not self.state_at(i).is_reset(self.c, tol)
        ]

    @property
    def pending(self) -> int:
        return len(self._queue)


def run(net: "Netlist", stimulus: Iterable, t_end: float,
        spike_budget: int = DEFAULT_SPIKE_BUDGET) -> SpikeRecord:
    sim = Simulator(net, spike_budget=spike_budget)
    sim.inject(stimulus)
    return sim.run(t_end)
