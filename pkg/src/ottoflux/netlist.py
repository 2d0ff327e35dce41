"""Circuit data model: nodes, two-terminal elements, ports, netlist I/O.

Element parameter values are stored in SI units.  The assembly layer
(:mod:`ottoflux.assembly`) converts to the internal unit system; nothing
else in the package should need to.

The JSON schema (see ``data/engine_table2.json`` for the shipped default):

.. code-block:: json

    {
      "nodes": [{"id": 0, "label": "gnd", "ground": true}, ...],
      "elements": [
        {"type": "capacitor", "label": "C_h_out", "j": 1, "k": 2, "C": "25.86 fF"},
        {"type": "inductor",  "label": "L_loop", "j": 6, "k": 0, "L": "0.023 nH"},
        {"type": "josephson_junction", "label": "J1", "j": 5, "k": 6, "Ic": "1.39 uA"},
        {"type": "resistor",  "label": "R_b", "j": 8, "k": 0, "R": "42.24 kOhm", "T": "20 mK"},
        {"type": "cpw_segment", "label": "cpw_a", "j": 4, "k": 5,
         "Z": "50 Ohm", "f_half": "12.24 GHz", "n_aux": 2},
        {"type": "port", "label": "port_feed_in", "node": 9, "Z0": "50 Ohm", "T": "20 mK"}
      ],
      "flux_bias": {"loop_inductor": "L_loop", "phi_ext_over_phi0": 0.0}
    }

``f_half`` is the ordinary (cycles) half-wavelength frequency; the element
stores ``omega_half = 2*pi*f_half`` in rad/s.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .constants import SI, PhysicalConstants
from .units import parse_quantity


@dataclass(frozen=True)
class Node:
    id: int
    label: str
    is_ground: bool = False


@dataclass(frozen=True)
class Capacitor:
    j: int
    k: int
    C: float  # F
    label: str = ""


@dataclass(frozen=True)
class Inductor:
    j: int
    k: int
    L: float  # H
    flux_bias: float = 0.0  # Wb, external flux threading the branch
    label: str = ""


@dataclass(frozen=True)
class JosephsonJunction:
    j: int
    k: int
    Ic: float  # A
    label: str = ""


@dataclass(frozen=True)
class Resistor:
    j: int
    k: int
    R: float  # Ohm
    T: float  # K
    label: str = ""


@dataclass(frozen=True)
class CpwSegment:
    j: int
    k: int
    Z: float  # Ohm, characteristic impedance
    omega_half: float  # rad/s, half-wavelength angular frequency
    n_aux: int = 2
    label: str = ""


@dataclass(frozen=True)
class Port:
    """Measurement/drive port: a Z0 resistor to ground plus a drive point."""

    node: int
    Z0: float  # Ohm
    T: float  # K
    label: str = ""


Element = Capacitor | Inductor | JosephsonJunction | Resistor | CpwSegment | Port

TWO_TERMINAL = (Capacitor, Inductor, JosephsonJunction, Resistor, CpwSegment)


@dataclass(frozen=True)
class Netlist:
    nodes: tuple[Node, ...]
    elements: tuple[Element, ...]
    constants: PhysicalConstants = field(default_factory=lambda: SI)

    # ------------------------------------------------------------------ views
    @property
    def ground(self) -> Node:
        grounds = [n for n in self.nodes if n.is_ground]
        if len(grounds) != 1:
            raise ValueError(f"netlist has {len(grounds)} ground nodes, needs exactly 1")
        return grounds[0]

    def node_by_label(self, label: str) -> Node:
        for n in self.nodes:
            if n.label == label:
                return n
        raise KeyError(label)

    def element_by_label(self, label: str) -> Element:
        for e in self.elements:
            if e.label == label:
                return e
        raise KeyError(label)

    def dissipators(self) -> list[Resistor | Port]:
        """Resistors and ports, in element order (each is one noise source)."""
        return [e for e in self.elements if isinstance(e, (Resistor, Port))]

    def ports(self) -> list[Port]:
        return [e for e in self.elements if isinstance(e, Port)]

    def terminals(self, element: Element) -> tuple[int, ...]:
        if isinstance(element, Port):
            return (element.node,)
        return (element.j, element.k)

    # ------------------------------------------------------------- transforms
    def with_flux(self, loop_inductor: str, phi_ext_wb: float) -> "Netlist":
        """Return a copy with the named inductor's flux bias set."""
        elems = []
        found = False
        for e in self.elements:
            if isinstance(e, Inductor) and e.label == loop_inductor:
                elems.append(replace(e, flux_bias=phi_ext_wb))
                found = True
            else:
                elems.append(e)
        if not found:
            raise KeyError(f"no inductor labeled {loop_inductor!r}")
        return Netlist(self.nodes, tuple(elems), self.constants)

    def with_temperature(self, label: str, T: float) -> "Netlist":
        """Return a copy with one resistor/port temperature replaced."""
        elems = []
        found = False
        for e in self.elements:
            if e.label == label and isinstance(e, (Resistor, Port)):
                elems.append(replace(e, T=T))
                found = True
            else:
                elems.append(e)
        if not found:
            raise KeyError(f"no resistor or port labeled {label!r}")
        return Netlist(self.nodes, tuple(elems), self.constants)

    def without_elements(self, labels: set[str]) -> "Netlist":
        elems = tuple(e for e in self.elements if e.label not in labels)
        return Netlist(self.nodes, elems, self.constants)


# ---------------------------------------------------------------------- JSON


def _element_from_record(rec: dict) -> Element:
    kind = rec["type"]
    label = rec.get("label", "")
    if kind == "capacitor":
        return Capacitor(rec["j"], rec["k"], parse_quantity(rec["C"], "capacitance"), label)
    if kind == "inductor":
        bias = rec.get("flux_bias_wb", 0.0)
        return Inductor(rec["j"], rec["k"], parse_quantity(rec["L"], "inductance"), bias, label)
    if kind == "josephson_junction":
        return JosephsonJunction(rec["j"], rec["k"], parse_quantity(rec["Ic"], "current"), label)
    if kind == "resistor":
        return Resistor(
            rec["j"], rec["k"], parse_quantity(rec["R"], "resistance"), parse_quantity(rec["T"], "temperature"), label
        )
    if kind == "cpw_segment":
        f_half = parse_quantity(rec["f_half"], "frequency")
        return CpwSegment(rec["j"], rec["k"], parse_quantity(rec["Z"], "resistance"), 2.0 * 3.141592653589793 * f_half, int(rec.get("n_aux", 2)), label)
    if kind == "port":
        return Port(
            rec["node"], parse_quantity(rec["Z0"], "resistance"), parse_quantity(rec["T"], "temperature"), label
        )
    raise ValueError(f"unknown element type {kind!r}")


def load_netlist(path: str | Path) -> Netlist:
    """Load a netlist JSON file, applying its flux_bias block."""
    doc = json.loads(Path(path).read_text())
    return netlist_from_dict(doc)


def netlist_from_dict(doc: dict) -> Netlist:
    nodes = tuple(Node(n["id"], n.get("label", f"n{n['id']}"), bool(n.get("ground", False))) for n in doc["nodes"])
    elements = tuple(_element_from_record(r) for r in doc["elements"])
    net = Netlist(nodes, elements)
    bias = doc.get("flux_bias")
    if bias:
        phi = float(bias.get("phi_ext_over_phi0", 0.0)) * net.constants.Phi0
        net = net.with_flux(bias["loop_inductor"], phi)
    return net
