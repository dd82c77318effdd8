"""Values as interspike intervals.

A magnitude ``x`` in ``[0, 1]`` travels as two spikes ``T_min + x * T_cod``
apart.  Signed values use a pair of neurons, one per sign; zero always goes on
the plus channel.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from stick.engine import ModelConstants, SpikeRecord

if TYPE_CHECKING:
    from stick.netlist import Netlist

DECODE_TOL = 1e-9  # seconds


class EncodingError(ValueError):
    pass


class DecodeError(EncodingError):
    pass


class WiringError(ValueError):
    pass


class IncompleteValueWarning(UserWarning):
    pass


class ZeroSignWarning(UserWarning):
    """Zero magnitude seen on the minus channel."""


@dataclass(frozen=True)
class CodingConstants:
    T_min: float = 0.010
    T_cod: float = 0.100
    model: ModelConstants = field(default_factory=ModelConstants)

    def __post_init__(self):
        if not (self.T_min > 0 and self.T_cod > 0):
            raise ValueError("T_min and T_cod must be positive")

    @property
    def T_max(self) -> float:
        return self.T_min + self.T_cod

    @property
    def w_e(self) -> float:
        return self.model.w_e

    @property
    def w_i(self) -> float:
        return self.model.w_i

    @property
    def w_acc(self) -> float:
        """g_e weight reaching threshold from reset after T_max."""
        return self.w_e * self.model.tau_m / self.T_max

    @property
    def w_acc_bar(self) -> float:
        """g_e weight reaching threshold from reset after T_cod."""
        return self.w_e * self.model.tau_m / self.T_cod

    @property
    def g_mult(self) -> float:
        """g_f weight whose gated trajectory from reset saturates at V_t."""
        return self.w_e * self.model.tau_m / self.model.tau_f

    @property
    def g_mult_acc(self) -> float:
        # saturates at V_t * T_cod / T_max, leaving v_lift of headroom
        return self.g_mult * self.T_cod / self.T_max

    @property
    def v_lift(self) -> float:
        return self.w_e * self.T_min / self.T_max

    def as_dict(self) -> dict:
        m = self.model
        return {
            "tau_m": m.tau_m, "tau_f": m.tau_f, "V_t": m.V_t, "V_reset": m.V_reset,
            "T_syn": m.T_syn, "T_neu": m.T_neu, "T_min": self.T_min, "T_cod": self.T_cod,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodingConstants":
        model_keys = ("tau_m", "tau_f", "V_t", "V_reset", "T_syn", "T_neu")
        model = ModelConstants(**{k: d[k] for k in model_keys if k in d})
        return cls(T_min=d.get("T_min", 0.010), T_cod=d.get("T_cod", 0.100), model=model)


DEFAULT = CodingConstants()


@dataclass(frozen=True)
class IntervalValue:
    magnitude: float
    sign: str  # "plus" | "minus"
    spike_times: tuple

    @property
    def value(self) -> float:
        return -self.magnitude if self.sign == "minus" else self.magnitude

    @property
    def interval(self) -> float:
        return self.spike_times[1] - self.spike_times[0]


def encode(x: float, c: CodingConstants = DEFAULT) -> float:
    if not 0.0 <= x <= 1.0:
        raise EncodingError(f"value {x!r} outside the representable range [0, 1]")
    return c.T_min + x * c.T_cod


def decode(dt: float, c: CodingConstants = DEFAULT, tol: float = DECODE_TOL) -> float:
    if not (c.T_min - tol <= dt <= c.T_max + tol):
        raise DecodeError(
            f"interval {dt!r} s outside [{c.T_min}, {c.T_max}] s (tolerance {tol} s)"
        )
    return min(1.0, max(0.0, (dt - c.T_min) / c.T_cod))


def _channel_ports(net: "Netlist", port: str):
    if port + "+" in net.ports:
        return port + "+", port + "-"
    if port in net.ports:
        return port, None
    raise WiringError(f"no port {port!r} (or {port}+/{port}-) in netlist")


def inject_value(net: "Netlist", port: str, x: float, sign: str = "+",
                 t0: float = 0.0) -> list:
    """Two stimulus events putting ``x`` on ``port`` with the given sign."""
    c = net.constants
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    dt = encode(x, c)
    if sign == "-" and x == 0.0:
        raise EncodingError("zero must be sent on the plus channel")
    plus, minus = _channel_ports(net, port)
    if sign == "-":
        if minus is None:
            raise WiringError(f"port {port!r} is unsigned; cannot inject a negative value")
        target = minus
    else:
        target = plus
    return [(t0, target, c.w_e), (t0 + dt, target, c.w_e)]


def inject_signed(net: "Netlist", port: str, value: float, t0: float = 0.0) -> list:
    return inject_value(net, port, abs(value), "-" if value < 0 else "+", t0)


def pair_times(times: Sequence[float], label: str = "") -> list:
    if len(times) % 2:
        warnings.warn(
            f"odd spike count ({len(times)}) on {label or 'channel'}; last value incomplete",
            IncompleteValueWarning,
            stacklevel=3,
        )
    return [(times[i], times[i + 1]) for i in range(0, len(times) - 1, 2)]


def read_values(rec: SpikeRecord, net: "Netlist", port: str,
                strict: bool = True) -> list:
    """Decode the value stream on ``port`` (or its ``port+``/``port-`` pair).

    Pairs are taken disjointly per channel and merged by first-spike time.
    With ``strict`` an out-of-range interval raises DecodeError; otherwise the
    magnitude is reported unclipped.
    """
    c = net.constants
    plus, minus = _channel_ports(net, port)
    out = []
    for name, sign in ((plus, "plus"), (minus, "minus")):
        if name is None:
            continue
        nid = net.ports[name].neuron
        for t1, t2 in pair_times(rec.times_of(nid), name):
            if strict:
                mag = decode(t2 - t1, c)
            else:
                mag = (t2 - t1 - c.T_min) / c.T_cod
            if sign == "minus" and t2 - t1 <= c.T_min + DECODE_TOL:
                warnings.warn(
                    f"zero decoded on minus channel {name!r} at t={t1:.9f}",
                    ZeroSignWarning,
                    stacklevel=2,
                )
            out.append(IntervalValue(mag, sign, (t1, t2)))
    out.sort(key=lambda v: v.spike_times[0])
    return out


def trace_csv(values: Iterable[IntervalValue], channel: str, signed: bool = True) -> list:
    def label(v):
        return channel + ("+" if v.sign == "plus" else "-") if signed else channel

    return [
        f"{label(v)},{v.spike_times[0]:.9f},{v.spike_times[1]:.9f},{v.value:.12g}"
        for v in values
    ]


def decoded_trace_csv(streams: dict, signed=None) -> str:
    """``streams``: port name -> list of IntervalValue.  Ports in ``signed``
    (all of them when None) get a +/- suffix on the channel column."""
    rows = []
    for port, values in streams.items():
        sgn = signed is None or port in signed
        rows.extend((v.spike_times[0], line) for v, line in zip(values, trace_csv(values, port, sgn)))
    rows.sort(key=lambda r: r[0])
    lines = ["index,channel,t1_s,t2_s,value"]
    lines += [f"{i},{line}" for i, (_, line) in enumerate(rows)]
    return "\n".join(lines) + "\n"
