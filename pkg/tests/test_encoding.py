import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stick import circuits
from stick.encoding import (
    DEFAULT,
    CodingConstants,
    DecodeError,
    EncodingError,
    IncompleteValueWarning,
    WiringError,
    ZeroSignWarning,
    decode,
    decoded_trace_csv,
    encode,
    inject_value,
    read_values,
)
from stick.engine import SpikeRecord

unit = st.floats(0.0, 1.0)


def test_default_constants():
    c = DEFAULT
    assert (c.T_min, c.T_cod, c.T_max) == (0.010, 0.100, pytest.approx(0.110))
    assert c.w_acc == pytest.approx(10.0 * 100.0 / 0.110)
    assert c.w_acc_bar == pytest.approx(10.0 * 100.0 / 0.100)
    assert c.g_mult == pytest.approx(10.0 * 100.0 / 0.020)


def test_g_mult_asymptote_is_threshold():
    # gated g_f from reset rises by tau_f * g / tau_m in total
    c = DEFAULT
    assert c.model.tau_f * c.g_mult / c.model.tau_m == pytest.approx(c.model.V_t)
    top = c.model.tau_f * c.g_mult_acc / c.model.tau_m + c.v_lift
    assert top == pytest.approx(c.model.V_t)


@pytest.mark.parametrize("x, dt", [(0, 0.010), (1, 0.110), (0.5, 0.060)])
def test_encode_examples(x, dt):
    assert encode(x) == pytest.approx(dt, abs=1e-15)


@pytest.mark.parametrize("dt, x", [(0.010, 0.0), (0.110, 1.0)])
def test_decode_examples(dt, x):
    assert decode(dt) == pytest.approx(x, abs=1e-12)


@pytest.mark.parametrize("x", [-0.01, 1.01, float("nan")])
def test_encode_range(x):
    with pytest.raises(EncodingError):
        encode(x)


def test_decode_tolerance_band():
    assert decode(0.010 - 0.5e-9) == 0.0
    with pytest.raises(DecodeError, match="0.0099"):
        decode(0.0099)
    with pytest.raises(DecodeError):
        decode(0.110 + 5e-9)


@given(unit)
def test_roundtrip(x):
    assert abs(decode(encode(x)) - x) <= 1e-15


@given(unit, unit)
def test_monotone(a, b):
    if a <= b:
        assert encode(a) <= encode(b)
        assert decode(encode(a)) <= decode(encode(b))
    if b - a > 1e-14:
        assert encode(a) < encode(b)


def test_bad_constants():
    with pytest.raises(ValueError):
        CodingConstants(T_min=0.0)


def test_inject_value_examples():
    net = circuits.build_signed_memory()
    assert inject_value(net, "input", 0.3, "+") == [
        (0.0, "input+", 10.0), (pytest.approx(0.040), "input+", 10.0)]
    ev = inject_value(net, "input", 1.0, "+", t0=0.005)
    assert [e[0] for e in ev] == [0.005, pytest.approx(0.115)]
    with pytest.raises(EncodingError):
        inject_value(net, "input", 0.0, "-")


def test_minus_into_unsigned_port_is_wiring_error():
    net = circuits.build_memory()
    with pytest.raises(WiringError):
        inject_value(net, "input", 0.4, "-")


def _rec(net, pairs):
    entries = sorted((t, net.resolve(p)) for p, ts in pairs.items() for t in ts)
    return SpikeRecord(entries, net.neurons)


def test_read_values_decodes_plus():
    net = circuits.build_signed_memory()
    vals = read_values(_rec(net, {"output+": [2.0, 2.06]}), net, "output")
    assert len(vals) == 1 and vals[0].value == pytest.approx(0.5)


def test_read_values_flags_minus_zero():
    net = circuits.build_signed_memory()
    with pytest.warns(ZeroSignWarning):
        vals = read_values(_rec(net, {"output-": [1.0, 1.01]}), net, "output")
    assert vals[0].sign == "minus" and vals[0].magnitude == pytest.approx(0.0, abs=1e-12)


def test_read_values_empty_and_odd():
    net = circuits.build_memory()
    assert read_values(SpikeRecord([], net.neurons), net, "output") == []
    with pytest.warns(IncompleteValueWarning):
        vals = read_values(_rec(net, {"output": [1.0, 1.05, 2.0]}), net, "output")
    assert len(vals) == 1


def test_read_values_out_of_band_is_decode_error():
    net = circuits.build_memory()
    with pytest.raises(DecodeError):
        read_values(_rec(net, {"output": [1.0, 1.2]}), net, "output")


@given(st.lists(st.tuples(st.booleans(), unit), max_size=6))
def test_pairs_never_span_channels(items):
    net = circuits.build_signed_memory()
    plus, minus, t = [], [], 0.0
    for is_minus, x in items:
        if is_minus and x == 0.0:
            continue
        (minus if is_minus else plus).extend([t, t + encode(x)])
        t += 0.3
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        vals = read_values(_rec(net, {"output+": plus, "output-": minus}), net, "output")
    assert len(vals) == (len(plus) + len(minus)) // 2
    for v in vals:
        src = plus if v.sign == "plus" else minus
        assert v.spike_times[0] in src and v.spike_times[1] in src
    assert [v.spike_times[0] for v in vals] == sorted(v.spike_times[0] for v in vals)


def test_trace_csv_format():
    net = circuits.build_signed_memory()
    vals = read_values(_rec(net, {"output-": [1.0, 1.06]}), net, "output")
    text = decoded_trace_csv({"output": vals})
    assert text.splitlines() == ["index,channel,t1_s,t2_s,value",
                                 "0,output-,1.000000000,1.060000000,-0.5"]
