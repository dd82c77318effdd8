"""Builders for the elementary interval-coded networks.

Every builder returns a fresh :class:`Netlist` whose ``ports`` form the
circuit's interface.  Weights are written in terms of the coding constants:
``we`` (one-event fire), ``wa`` (ge weight crossing threshold from reset in
``T_max``), ``gm`` (gated gf weight for the log/exp stages) and ``lift``.

Many circuits share two front-end detectors per input: ``first`` fires on the
first spike of a pair only (it inhibits itself), ``last`` needs both spikes
(half weight each).
"""

from __future__ import annotations

import math
from typing import Sequence

from stick.encoding import DEFAULT, CodingConstants, encode
from stick.netlist import Netlist, NetlistError

# Delay offset that lets last2 win an exact tie in the full subtractor, so
# equal inputs yield zero on the plus channel.
TIE_BIAS = 1e-9


class _B:
    """Small builder context: constants plus a netlist."""

    def __init__(self, kind: str, c: CodingConstants):
        self.c = c
        self.net = Netlist(constants=c, kind=kind)
        m = c.model
        self.Ts, self.Tn = m.T_syn, m.T_neu
        self.we = c.w_e
        self.wa = c.w_acc
        self.gm = c.g_mult_acc
        self.lift = c.v_lift

    def n(self, *names):
        ids = self.net.add_neurons(*names)
        return ids[0] if len(ids) == 1 else ids

    def v(self, a, b, w, d=None):
        self.net.add_synapse(a, b, "V", w, self.Ts if d is None else d)

    def ge(self, a, b, w, d=None):
        self.net.add_synapse(a, b, "ge", w, self.Ts if d is None else d)

    def gf(self, a, b, w, d=None):
        self.net.add_synapse(a, b, "gf", w, self.Ts if d is None else d)

    def gate(self, a, b, on: bool, d=None):
        self.net.add_synapse(a, b, "gate", 1 if on else -1, self.Ts if d is None else d)

    def port(self, name, neuron, dir):
        self.net.add_port(name, neuron, dir)

    def first_last(self, inp, first, last):
        self.v(inp, first, self.we)
        self.v(first, first, self.c.w_i)
        self.v(inp, last, 0.5 * self.we)

    def log_readout(self, src, acc, d=None):
        # gf drive saturating at V_t*T_cod/T_max, then the lift tops it up;
        # the lift goes last so the threshold check sees the full state
        self.gf(src, acc, self.gm, d)
        self.gate(src, acc, True, d)
        self.v(src, acc, self.lift, d)

    def exp_stop(self, src, acc, d=None):
        self.gate(src, acc, False, d)
        self.ge(src, acc, self.wa, d)
        self.v(src, acc, self.lift, d)

    def done(self):
        self.net.validate()
        return self.net


# ---------------------------------------------------------------------------
# storage
# ---------------------------------------------------------------------------


def build_constant(x: float, c: CodingConstants = DEFAULT) -> Netlist:
    dt = encode(x, c)
    b = _B("constant", c)
    recall, out = b.n("recall", "output")
    b.v(recall, out, b.we, b.Ts)
    b.v(recall, out, b.we, b.Ts + dt)
    b.port("recall", recall, "input")
    b.port("output", out, "output")
    b.net.meta["x"] = x
    return b.done()


def build_inverting_memory(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("inv-memory", c)
    inp, first, last, acc, recall, out = b.n("input", "first", "last", "acc", "recall", "output")
    b.first_last(inp, first, last)
    b.ge(first, acc, b.wa, b.Ts + c.T_min)
    b.ge(last, acc, -b.wa)
    b.ge(recall, acc, b.wa)
    b.v(recall, out, b.we, 2 * b.Ts + b.Tn)
    b.v(acc, out, b.we)
    b.port("input", inp, "input")
    b.port("recall", recall, "input")
    b.port("output", out, "output")
    return b.done()


def build_memory(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("memory", c)
    inp, first, last, acc, acc2, recall, ready, out = b.n(
        "input", "first", "last", "acc", "acc2", "recall", "ready", "output"
    )
    b.first_last(inp, first, last)
    # acc runs for T_max from the first spike; acc2 from the second spike
    # until acc fires, so it holds T_max - dT_in (plus fixed latencies)
    b.ge(first, acc, b.wa)
    b.ge(last, acc2, b.wa)
    b.ge(acc, acc2, -b.wa)
    b.v(acc, ready, b.we)
    b.ge(recall, acc2, b.wa)
    b.v(recall, out, b.we)
    b.v(acc2, out, b.we)
    b.port("input", inp, "input")
    b.port("recall", recall, "input")
    b.port("ready", ready, "indicator")
    b.port("output", out, "output")
    return b.done()


def build_signed_memory(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("signed-memory", c)
    net = b.net
    mem = net.instantiate(build_memory(c), "mem")
    inp, inm, recall, rp, rm, ready, outp, outm = b.n(
        "input+", "input-", "recall", "ready+", "ready-", "ready", "output+", "output-"
    )
    m_in, m_rec, m_rdy, m_out = (mem.id(k) for k in ("input", "recall", "ready", "output"))
    b.v(inp, m_in, b.we)
    b.v(inm, m_in, b.we)
    b.v(inp, rp, 0.25 * b.we)
    b.v(inm, rm, 0.25 * b.we)
    for r in (rp, rm):
        b.v(recall, r, 0.5 * b.we)
        b.v(r, m_rec, b.we)
    b.v(rp, rm, -0.5 * b.we)
    b.v(rm, rp, -0.5 * b.we)
    b.v(rp, outm, -2 * b.we)
    b.v(rm, outp, -2 * b.we)
    b.v(m_out, outp, b.we)
    b.v(m_out, outm, b.we)
    b.v(m_rdy, ready, b.we)
    b.port("input+", inp, "input")
    b.port("input-", inm, "input")
    b.port("recall", recall, "input")
    b.port("ready", ready, "indicator")
    b.port("output+", outp, "output")
    b.port("output-", outm, "output")
    return b.done()


def build_synchronizer(n: int, c: CodingConstants = DEFAULT, signed: bool = False) -> Netlist:
    if n < 1:
        raise ValueError("synchronizer needs at least one input")
    b = _B("signed-sync" if signed else "sync", c)
    net = b.net
    sub = build_signed_memory(c) if signed else build_memory(c)
    mems = [net.instantiate(sub, f"mem{i}") for i in range(n)]
    sync = b.n("sync")
    for i, m in enumerate(mems):
        b.v(m.id("ready"), sync, b.we / n)
        b.v(sync, m.id("recall"), b.we)
        chans = ("+", "-") if signed else ("",)
        for ch in chans:
            net.expose(m, "input" + ch, f"input{i}{ch}")
            net.expose(m, "output" + ch, f"output{i}{ch}")
    b.port("sync", sync, "indicator")
    net.meta["n"] = n
    return b.done()


def build_signed_synchronizer(n: int, c: CodingConstants = DEFAULT) -> Netlist:
    return build_synchronizer(n, c, signed=True)


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def _pair_front(b: _B):
    in1, in2, first1, last1, last2 = b.n("input1", "input2", "first1", "last1", "last2")
    b.first_last(in1, first1, last1)
    b.v(in2, last2, 0.5 * b.we)
    b.port("input1", in1, "input")
    b.port("input2", in2, "input")
    return in1, in2, first1, last1, last2


def _race(b: _B, first1, win_on, lose_on, me, other):
    """``me`` fires iff ``win_on`` spikes before ``lose_on``.

    Charged to 0.5 by first1; the winner's +0.5 completes it.  Self
    excitation and the other racer's inhibition undo the remaining -0.5
    contributions so both end at reset.
    """
    half = 0.5 * b.we
    b.v(first1, me, half)
    b.v(win_on, me, half)
    b.v(lose_on, me, -half)
    b.v(me, me, half)
    b.v(me, other, -half)


def build_minimum(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("min", c)
    in1, in2, first1, last1, last2 = _pair_front(b)
    s1, s2, out = b.n("smaller1", "smaller2", "output")
    half = 0.5 * b.we
    b.v(first1, out, b.we)
    b.v(first1, out, half, 2 * b.Ts)  # precharge: the earlier last completes it
    b.v(last1, out, half)
    b.v(last2, out, half)
    _race(b, first1, last1, last2, s1, s2)
    _race(b, first1, last2, last1, s2, s1)
    b.v(s1, out, -half)
    b.v(s2, out, -half)
    b.port("output", out, "output")
    b.port("smaller1", s1, "indicator")
    b.port("smaller2", s2, "indicator")
    return b.done()


def build_maximum(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("max", c)
    in1, in2, first1, last1, last2 = _pair_front(b)
    l1, l2, out = b.n("larger1", "larger2", "output")
    half = 0.5 * b.we
    b.v(in1, out, half)
    b.v(in2, out, half)
    _race(b, first1, last2, last1, l1, l2)
    _race(b, first1, last1, last2, l2, l1)
    b.port("output", out, "output")
    b.port("larger1", l1, "indicator")
    b.port("larger2", l2, "indicator")
    return b.done()


def build_subtractor(full: bool = True, c: CodingConstants = DEFAULT) -> Netlist:
    if not full:
        return _simple_subtractor(c)
    b = _B("sub", c)
    in1, in2, first1, last1, last2 = _pair_front(b)
    w1, w2, p, q, outp, outm = b.n("sign1", "sign2", "first_of", "last_of", "output+", "output-")
    half = 0.5 * b.we
    Ts = b.Ts
    # sign2: last2 arrives first -> result >= 0.  last1 is delayed by the tie
    # bias on its way to both sign neurons so equality resolves to plus.
    b.v(first1, w2, half)
    b.v(last2, w2, half)
    b.v(last1, w2, -half, Ts + TIE_BIAS)
    b.v(w2, w2, half)
    b.v(w2, w1, -half)
    b.v(first1, w1, half)
    b.v(last1, w1, half, Ts + TIE_BIAS)
    b.v(last2, w1, -half)
    b.v(w1, w1, half)
    b.v(w1, w2, -half)
    # first_of fires on the earlier second spike, last_of on the later
    b.v(first1, p, half)
    b.v(last1, p, half)
    b.v(last2, p, half)
    b.v(w1, p, -half)
    b.v(w2, p, -half)
    b.v(last1, q, half)
    b.v(last2, q, half)
    for o in (outp, outm):
        b.v(p, o, b.we, 2 * Ts)
        b.v(q, o, b.we, 2 * Ts + c.T_min)
    b.v(w2, outm, -2 * b.we)
    b.v(w1, outp, -2 * b.we)
    b.port("output+", outp, "output")
    b.port("output-", outm, "output")
    return b.done()


def _simple_subtractor(c: CodingConstants) -> Netlist:
    """Variant without tie detection.  Equal inputs drive both outputs and
    leave inhibition residue behind; kept to document that failure mode."""
    b = _B("sub-simple", c)
    in1, in2, s1, s2, inb1, inb2, outp, outm = b.n(
        "input1", "input2", "sync1", "sync2", "inb1", "inb2", "output+", "output-"
    )
    Ts, Tn, we = b.Ts, b.Tn, b.we
    b.v(in1, s1, 0.5 * we)
    b.v(in2, s2, 0.5 * we)
    b.v(s2, inb2, we, Ts + Tn)
    b.v(s1, inb2, c.w_i)
    b.v(s1, inb1, we, Ts + Tn)
    b.v(s2, inb1, c.w_i)
    b.v(inb1, outp, 2 * c.w_i)
    b.v(inb2, outm, 2 * c.w_i)
    b.v(s2, outp, we, 3 * Ts + 2 * Tn)
    b.v(s1, outp, we, c.T_min + 3 * Ts + 2 * Tn)
    b.v(s1, outm, we, 3 * Ts + 2 * Tn)
    b.v(s2, outm, we, c.T_min + 3 * Ts + 2 * Tn)
    b.port("input1", in1, "input")
    b.port("input2", in2, "input")
    b.port("output+", outp, "output")
    b.port("output-", outm, "output")
    return b.done()


# ---------------------------------------------------------------------------
# linear combination
# ---------------------------------------------------------------------------


def lincomb_headroom(alphas: Sequence[float], c: CodingConstants = DEFAULT) -> int:
    """Accumulator slow-down factor keeping every partial sum below threshold."""
    total = sum(abs(a) for a in alphas) * c.T_cod / c.T_max
    return max(1, math.floor(total) + 1)


def build_linear_combination(alphas: Sequence[float], c: CodingConstants = DEFAULT) -> Netlist:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("need at least one coefficient")
    if any(not math.isfinite(a) for a in alphas):
        raise ValueError("coefficients must be finite")
    n = len(alphas)
    K = lincomb_headroom(alphas, c)
    b = _B("lincomb", c)
    net = b.net
    accp, accm, acc2, sync = b.n("acc1+", "acc1-", "acc2", "sync")
    wa = b.wa / K
    for i, a in enumerate(alphas):
        for ch, sgn in (("+", 1), ("-", -1)):
            inp, first, last = b.n(f"in{i}{ch}", f"first{i}{ch}", f"last{i}{ch}")
            b.first_last(inp, first, last)
            if a != 0.0:
                acc = accp if a * sgn > 0 else accm
                b.ge(first, acc, abs(a) * wa, b.Ts + c.T_min)
                b.ge(last, acc, -abs(a) * wa)
            b.v(last, sync, b.we / n)
            b.port(f"input{i}{ch}", inp, "input")
    for acc in (accp, accm, acc2):
        b.ge(sync, acc, wa)
    # acc2 fires K*T_max after sync; acc1+/- fire early by their stored sums.
    # Delaying the acc1 spikes by D turns the advances into two intervals whose
    # difference the subtractor reports.
    sub = net.instantiate(build_subtractor(True, c), "sub")
    start = b.n("start")
    D = K * c.T_max + c.T_min
    b.v(acc2, sub.id("input1"), b.we)
    b.v(acc2, sub.id("input2"), b.we)
    b.v(accm, sub.id("input1"), b.we, D + b.Ts)
    b.v(accp, sub.id("input2"), b.we, D + b.Ts)
    b.v(sub.id("output+"), start, 0.5 * b.we)
    b.v(sub.id("output-"), start, 0.5 * b.we)
    net.expose(sub, "output+")
    net.expose(sub, "output-")
    b.port("start", start, "indicator")
    net.meta.update(alphas=tuple(alphas), headroom=K)
    return b.done()


# ---------------------------------------------------------------------------
# nonlinear
# ---------------------------------------------------------------------------


def build_log(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("log", c)
    inp, first, last, acc, out = b.n("input", "first", "last", "acc", "output")
    b.first_last(inp, first, last)
    b.ge(first, acc, b.wa, b.Ts + c.T_min)
    b.ge(last, acc, -b.wa)
    b.log_readout(last, acc)
    b.v(last, out, b.we, 2 * b.Ts + b.Tn)
    b.v(acc, out, b.we, b.Ts + c.T_min)
    b.port("input", inp, "input")
    b.port("output", out, "output")
    return b.done()


def build_exp(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("exp", c)
    inp, first, last, acc, out = b.n("input", "first", "last", "acc", "output")
    b.first_last(inp, first, last)
    b.gf(first, acc, b.gm, b.Ts + c.T_min)
    b.gate(first, acc, True, b.Ts + c.T_min)
    b.exp_stop(last, acc)
    b.v(last, out, b.we, 2 * b.Ts + b.Tn)
    b.v(acc, out, b.we, b.Ts + c.T_min)
    b.port("input", inp, "input")
    b.port("output", out, "output")
    return b.done()


def build_multiplier(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("mul", c)
    in1, in2, f1, f2, l1, l2, log1, log2, sync, accx, out = b.n(
        "input1", "input2", "first1", "first2", "last1", "last2",
        "acc_log1", "acc_log2", "sync", "acc_exp", "output",
    )
    for inp, f, l, acc in ((in1, f1, l1, log1), (in2, f2, l2, log2)):
        b.first_last(inp, f, l)
        b.ge(f, acc, b.wa, b.Ts + c.T_min)
        b.ge(l, acc, -b.wa)
        b.v(l, sync, 0.5 * b.we)
    # sync starts log1 and the exp accumulator together; log1 hands over to
    # log2, which stops the exp accumulator after both log delays
    b.log_readout(sync, log1)
    b.log_readout(log1, log2)
    d0 = 3 * b.Ts + 2 * b.Tn
    b.gf(sync, accx, b.gm, d0)
    b.gate(sync, accx, True, d0)
    b.exp_stop(log2, accx)
    b.v(log2, out, b.we, 2 * b.Ts + b.Tn)
    b.v(accx, out, b.we, b.Ts + c.T_min)
    b.port("input1", in1, "input")
    b.port("input2", in2, "input")
    b.port("output", out, "output")
    return b.done()


def build_signed_multiplier(c: CodingConstants = DEFAULT) -> Netlist:
    b = _B("signed-mul", c)
    net = b.net
    ins = {k: b.n(f"input{k}") for k in ("1+", "1-", "2+", "2-")}
    mul = net.instantiate(build_multiplier(c), "mul")
    signs = {k: b.n(f"sign{k}") for k in ("++", "+-", "-+", "--")}
    outp, outm = b.n("output+", "output-")
    q = 0.25 * b.we
    for k, nid in ins.items():
        b.v(nid, mul.id("input" + k[0]), b.we)
    for (s1, s2), sn in signs.items():
        b.v(ins["1" + s1], sn, q)
        b.v(ins["2" + s2], sn, q)
    flip = {"+": "-", "-": "+"}
    for (s1, s2), sn in signs.items():
        # clear the two half-charged rivals sharing one input sign
        b.v(sn, signs[s1 + flip[s2]], -0.5 * b.we)
        b.v(sn, signs[flip[s1] + s2], -0.5 * b.we)
        b.v(sn, outm if s1 == s2 else outp, -2 * b.we)
    b.v(mul.id("output"), outp, b.we)
    b.v(mul.id("output"), outm, b.we)
    for k, nid in ins.items():
        b.port(f"input{k}", nid, "input")
    b.port("output+", outp, "output")
    b.port("output-", outm, "output")
    return b.done()


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def build_integrator(gain: float, x0: float = 0.0, c: CodingConstants = DEFAULT) -> Netlist:
    """x_{k+1} = x_k + gain * u_k.  ``init`` loads x0, ``start`` emits it."""
    if not -1.0 <= x0 <= 1.0:
        raise ValueError(f"x0={x0} outside [-1, 1]")
    b = _B("integrator", c)
    net = b.net
    lc = net.instantiate(build_linear_combination([1.0, gain], c), "lc")
    init, start, new_input = b.n("init", "start", "new_input")
    ch0 = "input0-" if x0 < 0 else "input0+"
    b.v(init, lc.id(ch0), b.we)
    b.v(init, lc.id(ch0), b.we, b.Ts + encode(abs(x0), c))
    b.v(start, lc.id("input1+"), b.we)
    b.v(start, lc.id("input1+"), b.we, b.Ts + c.T_min)
    b.v(lc.id("output+"), lc.id("input0+"), b.we)
    b.v(lc.id("output-"), lc.id("input0-"), b.we)
    b.v(lc.id("start"), new_input, b.we)
    net.expose(lc, "input1+", "input+")
    net.expose(lc, "input1-", "input-")
    net.expose(lc, "output+")
    net.expose(lc, "output-")
    b.port("init", init, "input")
    b.port("start", start, "input")
    b.port("new_input", new_input, "indicator")
    net.meta.update(gain=gain, x0=x0)
    return b.done()


# ---------------------------------------------------------------------------
# registry for the CLI and the contract harness
# ---------------------------------------------------------------------------

BUILDERS = {
    "constant": lambda c=DEFAULT, x=0.5: build_constant(x, c),
    "inv-memory": build_inverting_memory,
    "memory": build_memory,
    "signed-memory": build_signed_memory,
    "sync": lambda c=DEFAULT, n=2: build_synchronizer(n, c),
    "signed-sync": lambda c=DEFAULT, n=2: build_signed_synchronizer(n, c),
    "min": build_minimum,
    "max": build_maximum,
    "sub": lambda c=DEFAULT, full=True: build_subtractor(full, c),
    "lincomb": lambda c=DEFAULT, alphas=(1.0, -1.0): build_linear_combination(alphas, c),
    "log": build_log,
    "exp": build_exp,
    "mul": build_multiplier,
    "signed-mul": build_signed_multiplier,
    "integrator": lambda c=DEFAULT, gain=0.5, x0=0.0: build_integrator(gain, x0, c),
}


def build(kind: str, c: CodingConstants = DEFAULT, **params) -> Netlist:
    try:
        f = BUILDERS[kind]
    except KeyError:
        raise NetlistError(f"unknown circuit kind {kind!r}; choose from {sorted(BUILDERS)}") from None
    return f(c, **params)
