"""Interval-coded spiking computation: exact simulator, circuit library, demos."""

from stick.encoding import CodingConstants, decode, encode
from stick.engine import ModelConstants, Simulator, SpikeRecord, run
from stick.netlist import Netlist, load_netlist, save_netlist

__all__ = [
    "CodingConstants",
    "ModelConstants",
    "Netlist",
    "Simulator",
    "SpikeRecord",
    "decode",
    "encode",
    "load_netlist",
    "run",
    "save_netlist",
]
