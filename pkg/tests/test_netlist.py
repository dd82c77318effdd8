import json

import pytest

from stick import circuits, systems
from stick.encoding import DEFAULT, inject_value, read_values
from stick.engine import Simulator
from stick.netlist import Netlist, NetlistError, load_netlist, save_netlist


def test_add_neuron_ids_and_duplicates():
    net = Netlist()
    assert net.add_neuron("acc") == 0
    with pytest.raises(NetlistError, match="duplicate"):
        net.add_neuron("acc")
    ids = [net.add_neuron(f"n{i}") for i in range(549)]
    assert len(set(ids)) == 549


def test_add_synapse_rules():
    net = Netlist()
    a, b = net.add_neurons("a", "b")
    T = DEFAULT.model.T_syn
    net.add_synapse(a, b, "V", DEFAULT.w_e, T)
    net.add_synapse(a, b, "ge", DEFAULT.w_acc, T + DEFAULT.T_min)
    with pytest.raises(NetlistError, match="gate"):
        net.add_synapse(a, b, "gate", 0.5, T)
    with pytest.raises(NetlistError, match="below T_syn"):
        net.add_synapse(a, b, "V", 1.0, 0.5 * T)
    with pytest.raises(NetlistError):
        net.add_synapse(a, 7, "V", 1.0, T)


def test_instantiate_is_disjoint_and_prefixed():
    net = Netlist()
    m1 = net.instantiate(circuits.build_memory(), "m1")
    m2 = net.instantiate(circuits.build_memory(), "m2")
    assert len(net) == 16
    assert net.neurons[m1.id("acc2") if "acc2" in m1 else 4].startswith("m1.")
    assert {m1.id(k) for k in m1}.isdisjoint({m2.id(k) for k in m2})
    with pytest.raises(NetlistError, match="collision"):
        net.instantiate(circuits.build_memory(), "m1")


def test_instances_are_isolated():
    net = Netlist()
    m1 = net.instantiate(circuits.build_memory(), "m1")
    m2 = net.instantiate(circuits.build_memory(), "m2")
    sim = Simulator(net)
    c = DEFAULT
    sim.inject([(0.0, m1.id("input"), c.w_e), (0.05, m1.id("input"), c.w_e),
                (0.5, m1.id("recall"), c.w_e)])
    rec = sim.run(2.0)
    assert all(net.neurons[n].startswith("m1.") for _, n in rec)
    assert rec.times_of(m2.id("output")) == []


def test_instance_behaves_like_standalone():
    alone = circuits.build_memory()
    net = Netlist()
    m = net.instantiate(alone, "m")
    stim = inject_value(alone, "input", 0.37) + [(0.5, "recall", DEFAULT.w_e)]
    r1 = Simulator(alone)
    r1.inject(stim)
    a = r1.run(2.0)
    r2 = Simulator(net)
    r2.inject([(t, m.id(p), w) for t, p, w in stim])
    b = r2.run(2.0)
    assert [t for t, _ in a] == [t for t, _ in b]


def test_connect_direction_checks():
    net = Netlist()
    const = net.instantiate(circuits.build_constant(0.5), "c")
    lc = net.instantiate(circuits.build_linear_combination([1.0, -1.0]), "lc")
    net.connect(const["output"], lc["input0+"])
    s = net.synapses[-1]
    assert (s.kind, s.weight, s.delay) == ("V", DEFAULT.w_e, DEFAULT.model.T_syn)
    with pytest.raises(NetlistError):
        net.connect(const["output"], lc["output+"])
    with pytest.raises(NetlistError):
        net.connect(lc["input1+"], const["recall"])


def test_roundtrip_memory(tmp_path):
    net = circuits.build_memory()
    p = tmp_path / "m.json"
    save_netlist(net, p)
    back = load_netlist(p)
    assert back.to_dict() == net.to_dict()
    assert p.read_text() == back.to_json()


def test_save_is_deterministic():
    assert circuits.build_signed_multiplier().to_json() == circuits.build_signed_multiplier().to_json()


def test_roundtrip_lorenz_preserves_counts_and_behaviour(tmp_path):
    sysm = systems.build_lorenz(systems.LorenzConfig())
    p = tmp_path / "lorenz.json"
    save_netlist(sysm.net, p)
    back = load_netlist(p)
    assert len(back) == len(sysm.net)
    assert len(back.synapses) == len(sysm.net.synapses)
    assert sorted(back.ports) == sorted(sysm.net.ports)

    def spikes(net):
        sim = Simulator(net)
        sim.inject([(0.0, "init", 10.0), (0.0, "start", 10.0)])
        return [(t, net.neurons[n]) for t, n in sim.run(3.0)]

    assert spikes(back) == spikes(sysm.net)


def _doc():
    return json.loads(circuits.build_memory().to_json())


@pytest.mark.parametrize(
    "mutate, pointer",
    [
        (lambda d: d["synapses"][3].update(delay_s=1e-4), "/synapses/3/delay_s"),
        (lambda d: d["synapses"][0].update(kind="gx"), "/synapses/0/kind"),
        (lambda d: d["synapses"][1].update(kind="gate", weight_mV=0.5), "/synapses/1/weight_mV"),
        (lambda d: d["synapses"][2].pop("src"), "/synapses/2"),
        (lambda d: d["ports"]["ready"].update(dir="sideways"), "/ports/ready/dir"),
        (lambda d: d["neurons"][0].update(name="output"), "/name: duplicate"),
        (lambda d: d["synapses"][0].update(dst=99), "/synapses/0/dst"),
    ],
)
def test_schema_errors_carry_pointer(mutate, pointer):
    d = _doc()
    mutate(d)
    with pytest.raises(NetlistError) as err:
        Netlist.from_dict(d)
    assert pointer in str(err.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(NetlistError, match="cannot read"):
        load_netlist(tmp_path / "nope.json")


def test_loaded_netlists_run(tmp_path):
    for kind in circuits.BUILDERS:
        net = Netlist.from_json(circuits.build(kind).to_json())
        sim = Simulator(net)
        for name, p in net.ports.items():
            if p.dir == "input":
                sim.inject([(0.0, name, 10.0)])
        sim.run(2.0)


def test_breakdown_counts_prefixes():
    sysm = systems.build_first_order(systems.FirstOrderConfig())
    b = sysm.net.breakdown()
    assert b["lc"] == 28 and b["integ"] == 31 and b["const"] == 2


def test_memory_value_through_json(tmp_path):
    net = Netlist.from_json(circuits.build_memory().to_json())
    sim = Simulator(net)
    sim.inject(inject_value(net, "input", 0.42) + [(0.5, "recall", 10.0)])
    vals = read_values(sim.run(2.0), net, "output")
    assert vals[0].value == pytest.approx(0.42, abs=1e-9)
