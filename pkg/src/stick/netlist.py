"""Neuron/synapse graphs with named ports, composition and JSON round-trip."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import jsonschema

from stick.encoding import DEFAULT, CodingConstants

KINDS = ("V", "ge", "gf", "gate")
DIRECTIONS = ("input", "output", "indicator")
# delays are compared with this slack so that sums like T_syn + T_min survive
# a JSON round trip
DELAY_SLACK = 1e-15


class NetlistError(ValueError):
    pass


@dataclass(frozen=True)
class Synapse:
    src: int
    dst: int
    kind: str
    weight: float  # mV for V/ge/gf, +-1 for gate
    delay: float  # s


@dataclass(frozen=True)
class Port:
    neuron: int
    dir: str


class PortBundle(dict):
    """Port name -> Port, re-addressed into the parent netlist."""

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(key) from None

    def id(self, name: str) -> int:
        return self[name].neuron


@dataclass
class Netlist:
    constants: CodingConstants = DEFAULT
    kind: str = ""
    neurons: list = field(default_factory=list)
    synapses: list = field(default_factory=list)
    ports: dict = field(default_factory=dict)
    # builder metadata (sub-circuit breakdown etc.); not serialized
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self._ids = {name: i for i, name in enumerate(self.neurons)}

    def __len__(self):
        return len(self.neurons)

    # -- construction -------------------------------------------------------

    def add_neuron(self, name: str) -> int:
        if name in self._ids:
            raise NetlistError(f"duplicate neuron name {name!r}")
        self.neurons.append(name)
        self._ids[name] = len(self.neurons) - 1
        return self._ids[name]

    def add_neurons(self, *names) -> list:
        return [self.add_neuron(n) for n in names]

    def add_synapse(self, src, dst, kind: str, weight: float,
                    delay: Optional[float] = None) -> int:
        src, dst = self.resolve(src), self.resolve(dst)
        if delay is None:
            delay = self.constants.model.T_syn
        _check_synapse(kind, weight, delay, self.constants.model.T_syn)
        self.synapses.append(Synapse(src, dst, kind, float(weight), float(delay)))
        return len(self.synapses) - 1

    def syn(self, src, dst, weight: float, delay: Optional[float] = None,
            kind: str = "V") -> int:
        """Shorthand with the weight first, V kind by default."""
        return self.add_synapse(src, dst, kind, weight, delay)

    def add_port(self, name: str, neuron, dir: str):
        if dir not in DIRECTIONS:
            raise NetlistError(f"port direction must be one of {DIRECTIONS}, got {dir!r}")
        if name in self.ports:
            raise NetlistError(f"duplicate port {name!r}")
        self.ports[name] = Port(self.resolve(neuron), dir)

    def resolve(self, ref: Union[int, str]) -> int:
        if isinstance(ref, int):
            if not 0 <= ref < len(self.neurons):
                raise NetlistError(f"neuron id {ref} does not exist")
            return ref
        if isinstance(ref, Port):
            return ref.neuron
        if ref in self.ports:
            return self.ports[ref].neuron
        if ref in self._ids:
            return self._ids[ref]
        raise NetlistError(f"unknown port or neuron {ref!r}")

    def id_of(self, name: str) -> int:
        return self._ids[name]

    # -- composition ----------------------------------------------------------

    def instantiate(self, sub: "Netlist", prefix: str) -> PortBundle:
        """Copy ``sub`` into this netlist under ``prefix.`` and return its
        ports re-addressed here."""
        if sub.constants != self.constants:
            raise NetlistError("sub-circuit built with different constants")
        names = [f"{prefix}.{n}" for n in sub.neurons]
        clash = [n for n in names if n in self._ids]
        if clash:
            raise NetlistError(f"name collision on instantiate: {clash[0]!r}")
        base = len(self.neurons)
        for n in names:
            self.add_neuron(n)
        for s in sub.synapses:
            self.synapses.append(Synapse(s.src + base, s.dst + base, s.kind, s.weight, s.delay))
        self.meta.setdefault("parts", {})[prefix] = (sub.kind, len(sub))
        if "headroom" in sub.meta:
            self.meta.setdefault("headrooms", []).append(sub.meta["headroom"])
        self.meta.setdefault("headrooms", []).extend(sub.meta.get("headrooms", []))
        return PortBundle({k: Port(p.neuron + base, p.dir) for k, p in sub.ports.items()})

    def connect(self, out_port: Port, in_port: Port, delay: Optional[float] = None) -> int:
        if out_port.dir not in ("output", "indicator"):
            raise NetlistError("connect source must be an output or indicator port")
        if in_port.dir != "input":
            raise NetlistError("connect target must be an input port")
        return self.add_synapse(out_port.neuron, in_port.neuron, "V", self.constants.w_e, delay)

    def expose(self, bundle: PortBundle, name: str, as_name: Optional[str] = None,
               dir: Optional[str] = None):
        p = bundle[name]
        self.add_port(as_name or name, p.neuron, dir or p.dir)

    # -- inspection -----------------------------------------------------------

    def breakdown(self) -> dict:
        """Neuron count per top-level name prefix (own neurons under '')."""
        counts = Counter(n.split(".", 1)[0] if "." in n else "" for n in self.neurons)
        return dict(sorted(counts.items()))

    def validate(self):
        T_syn = self.constants.model.T_syn
        if len(set(self.neurons)) != len(self.neurons):
            raise NetlistError("hierarchical names are not unique")
        n = len(self.neurons)
        for i, s in enumerate(self.synapses):
            if not (0 <= s.src < n and 0 <= s.dst < n):
                raise NetlistError(f"synapse {i} has a dangling endpoint")
            _check_synapse(s.kind, s.weight, s.delay, T_syn, where=f"synapse {i}")
        for name, p in self.ports.items():
            if not 0 <= p.neuron < n or p.dir not in DIRECTIONS:
                raise NetlistError(f"bad port {name!r}")

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        """Canonical form: neurons sorted by name, synapses grouped by source.

        Within one source the original order is kept.  It is meaningful:
        events one spike delivers to the same target at the same instant are
        applied in that order.
        """
        order = sorted(range(len(self.neurons)), key=lambda i: self.neurons[i])
        new_id = {old: new for new, old in enumerate(order)}
        syns = sorted(
            ((new_id[s.src], new_id[s.dst], s.kind, s.weight, s.delay) for s in self.synapses),
            key=lambda r: r[0],
        )
        return {
            "kind": self.kind,
            "constants": self.constants.as_dict(),
            "neurons": [{"id": new_id[i], "name": self.neurons[i]} for i in order],
            "synapses": [
                {"src": a, "dst": b, "kind": k, "weight_mV": w, "delay_s": d}
                for a, b, k, w, d in syns
            ],
            "ports": {
                name: {"neuron": new_id[p.neuron], "dir": p.dir}
                for name, p in sorted(self.ports.items())
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "Netlist":
        errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(e.absolute_path))
        if errors:
            e = errors[0]
            raise NetlistError(f"schema error at {_pointer(e.absolute_path)}: {e.message}")
        try:
            constants = CodingConstants.from_dict(doc["constants"])
        except (TypeError, ValueError) as exc:
            raise NetlistError(f"schema error at /constants: {exc}") from None
        neurons = sorted(doc["neurons"], key=lambda r: r["id"])
        if [r["id"] for r in neurons] != list(range(len(neurons))):
            raise NetlistError("schema error at /neurons: ids must be 0..N-1")
        net = cls(constants=constants, kind=doc.get("kind", ""))
        for r in neurons:
            if r["name"] in net._ids:
                raise NetlistError(f"schema error at /neurons/{r['id']}/name: duplicate {r['name']!r}")
            net.add_neuron(r["name"])
        T_syn = constants.model.T_syn
        for i, s in enumerate(doc["synapses"]):
            where = f"/synapses/{i}"
            for end in ("src", "dst"):
                if s[end] >= len(neurons):
                    raise NetlistError(f"schema error at {where}/{end}: no neuron {s[end]}")
            try:
                _check_synapse(s["kind"], s["weight_mV"], s["delay_s"], T_syn, where=where)
            except NetlistError as exc:
                raise NetlistError(f"schema error at {exc}") from None
            net.synapses.append(
                Synapse(s["src"], s["dst"], s["kind"], float(s["weight_mV"]), float(s["delay_s"]))
            )
        for name, p in doc["ports"].items():
            if p["neuron"] >= len(neurons):
                raise NetlistError(f"schema error at /ports/{name}/neuron: no neuron {p['neuron']}")
            net.ports[name] = Port(p["neuron"], p["dir"])
        return net

    @classmethod
    def from_json(cls, text: str) -> "Netlist":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetlistError(f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)


def _check_synapse(kind, weight, delay, T_syn, where="synapse"):
    if kind not in KINDS:
        raise NetlistError(f"{where}/kind: unknown synapse kind {kind!r}")
    if kind == "gate" and weight not in (1, -1):
        raise NetlistError(f"{where}/weight_mV: gate weight must be +1 or -1, got {weight!r}")
    if not delay >= T_syn - DELAY_SLACK:
        raise NetlistError(f"{where}/delay_s: delay {delay!r} s below T_syn={T_syn} s")


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path) if path else "/"


SCHEMA = {
    "type": "object",
    "required": ["constants", "neurons", "synapses", "ports"],
    "properties": {
        "kind": {"type": "string"},
        "constants": {
            "type": "object",
            "additionalProperties": {"type": "number"},
        },
        "neurons": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "name"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "name": {"type": "string", "minLength": 1},
                },
            },
        },
        "synapses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["src", "dst", "kind", "weight_mV", "delay_s"],
                "properties": {
                    "src": {"type": "integer", "minimum": 0},
                    "dst": {"type": "integer", "minimum": 0},
                    "kind": {"enum": list(KINDS)},
                    "weight_mV": {"type": "number"},
                    "delay_s": {"type": "number"},
                },
            },
        },
        "ports": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["neuron", "dir"],
                "properties": {
                    "neuron": {"type": "integer", "minimum": 0},
                    "dir": {"enum": list(DIRECTIONS)},
                },
            },
        },
    },
}
_VALIDATOR = jsonschema.Draft7Validator(SCHEMA)


def save_netlist(net: Netlist, path) -> None:
    Path(path).write_text(net.to_json())


def load_netlist(path) -> Netlist:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise NetlistError(f"cannot read {path}: {exc}") from None
    return Netlist.from_json(text)
