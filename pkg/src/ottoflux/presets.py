"""Canonical heat-engine netlist and noise-channel helpers.

The shipped circuit (``data/engine_table2.json``) encodes the autonomous
heat-engine device with its fitted parameter set.  Topology, with node ids:

    0  gnd
    1  hot_port   --[C_h_out]-- 2 hot_in  ==cpw_h== 3 hot_out --[C_h_cpl]--+
                                                                           |
    4  wb_in  ==cpw_a== 5 squid_top --J1-- 6 squid_tap --J2(5-0) to gnd    |
    4  <--------------------------------------------------------------
    6  squid_tap --[L_loop]-- gnd     (SQUID loop = J1, L_loop, J2; flux here)
    7  drv_mid  ==cpw_b== 6           (driving-resonator strip)
    8  drv_head --[L_lead]-- 7, --[C_PPC]-- gnd, --[R_b]-- gnd, --[C_b_out]-- 9
    9  feed     (two feedline ports)
    4  wb_in --[C_c_cpl]-- 10 cold_in ==cpw_c== 11 cold_out --[C_c_out]-- 12 cold_port

Both filters couple capacitively to the working-body line's open end
(wb_in); the line's far end is grounded through the SQUID.  The driving
resonator is a strip shunted by the large parallel-plate capacitor, its
ground return threading the galvanic segment L_loop shared with the SQUID
loop, so the driving current modulates the junction phases.  The galvanic
coupling inductance splits into the in-loop part (L_loop) and the lead
part (L_lead); the split fraction is a geometric detail fixed here.

The working-body line is a quarter-wave piece: its fundamental sits at
6.12 GHz against the SQUID short, which makes its half-wavelength frequency
2 x 6.12 = 12.24 GHz in the distributed-element convention used by the
assembly.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from functools import lru_cache
from pathlib import Path

from .netlist import (
    Capacitor,
    CpwSegment,
    Inductor,
    JosephsonJunction,
    Netlist,
    Node,
    Port,
    Resistor,
)
from .noise import NoiseChannelSet, PsdTarget, aaa_channels

TWO_PI = 2.0 * math.pi

# Fitted device parameters (SI).
#
# f_half_a: the working-body line is a quarter-wave piece shorted through
# the SQUID; encoding its quoted 6.12 GHz fundamental literally (half-wave
# 12.24 GHz) puts the dressed working-body ladder ~4% above the measured
# frequencies and shifts the instability pocket off the reported operating
# flux.  The value here is fitted so the zero-flux dressed resonance lands
# at the measured 11.10 GHz; all other parameters are as quoted.
ENGINE_PARAMS = {
    "f_half_h": 10.69e9,
    "f_half_c": 9.37e9,
    "f_half_a": 11.75e9,
    "f_half_b": 15.0e9,
    "Z_line": 50.0,
    "C_h_out": 25.86e-15,
    "C_h_cpl": 11.48e-15,
    "C_c_out": 30.0e-15,
    "C_c_cpl": 10.52e-15,
    "C_b_out": 29.09e-15,
    "C_ppc": 144.2e-12,
    "R_b": 42.24e3,
    "I1": 1.39e-6,
    "I2": 1.44e-6,
    "L_cpl": 0.091e-9,
    "Z0": 50.0,
    "T_c": 0.020,
    "T_b": 0.020,
    "T_base": 0.020,
    "loop_fraction": 0.25,
    # Drive lines and the feedline are DC-grounded through the measurement
    # chain; a large shunt inductor pins each otherwise-diffusing node flux
    # (|Z| > 2 kOhm above 300 MHz, 60x the port impedance).  Filter lines tie to
    # their port nodes so every pinning loop contains a port resistor and
    # relaxes instead of ringing.
    "L_gnd": 1e-6,
}

LOOP_INDUCTOR = "L_loop"
DRIVING_NODE = "drv_head"
FEED_PORTS = ("port_feed_in", "port_feed_out")
FILTER_PORTS = ("port_hot", "port_cold")
HOT_LABEL = "port_hot"


def engine_netlist(
    phi_ext_over_phi0: float = 0.0,
    T_h: float = 0.020,
    n_aux: int = 2,
    loop_fraction: float | None = None,
    params: dict | None = None,
) -> Netlist:
    """Build the engine circuit with the given flux bias and hot temperature."""
    p = dict(ENGINE_PARAMS)
    if params:
        p.update(params)
    x = p["loop_fraction"] if loop_fraction is None else loop_fraction
    if not 0.0 < x < 1.0:
        raise ValueError("loop_fraction must lie strictly inside (0, 1)")
    Z = p["Z_line"]
    nodes = tuple(
        Node(i, lbl, i == 0)
        for i, lbl in enumerate(
            [
                "gnd",
                "hot_port",
                "hot_in",
                "hot_out",
                "wb_in",
                "squid_top",
                "squid_tap",
                "drv_mid",
                "drv_head",
                "feed",
                "cold_in",
                "cold_out",
                "cold_port",
            ]
        )
    )
    elements = (
        Port(1, p["Z0"], T_h, "port_hot"),
        Capacitor(1, 2, p["C_h_out"], "C_h_out"),
        CpwSegment(2, 3, Z, TWO_PI * p["f_half_h"], n_aux, "cpw_h"),
        Capacitor(3, 4, p["C_h_cpl"], "C_h_cpl"),
        CpwSegment(4, 5, Z, TWO_PI * p["f_half_a"], n_aux, "cpw_a"),
        JosephsonJunction(5, 6, p["I1"], "J1"),
        JosephsonJunction(5, 0, p["I2"], "J2"),
        Inductor(6, 0, x * p["L_cpl"], 0.0, "L_loop"),
        CpwSegment(7, 6, Z, TWO_PI * p["f_half_b"], n_aux, "cpw_b"),
        Inductor(8, 7, (1.0 - x) * p["L_cpl"], 0.0, "L_lead"),
        Capacitor(8, 0, p["C_ppc"], "C_PPC"),
        Resistor(8, 0, p["R_b"], p["T_b"], "R_b"),
        Capacitor(8, 9, p["C_b_out"], "C_b_out"),
        Port(9, p["Z0"], p["T_base"], "port_feed_in"),
        Port(9, p["Z0"], p["T_base"], "port_feed_out"),
        Capacitor(4, 10, p["C_c_cpl"], "C_c_cpl"),
        CpwSegment(10, 11, Z, TWO_PI * p["f_half_c"], n_aux, "cpw_c"),
        Capacitor(11, 12, p["C_c_out"], "C_c_out"),
        Port(12, p["Z0"], p["T_c"], "port_cold"),
        Inductor(1, 0, p["L_gnd"], 0.0, "L_gnd_hot"),
        Inductor(2, 1, p["L_gnd"], 0.0, "L_tie_hline"),
        Inductor(9, 0, p["L_gnd"], 0.0, "L_gnd_feed"),
        Inductor(10, 12, p["L_gnd"], 0.0, "L_tie_cline"),
        Inductor(12, 0, p["L_gnd"], 0.0, "L_gnd_cold"),
    )
    net = Netlist(nodes, elements)
    if phi_ext_over_phi0:
        net = net.with_flux(LOOP_INDUCTOR, phi_ext_over_phi0 * net.constants.Phi0)
    return net


DEFAULT_NOISE_BAND = TWO_PI * 22e9  # covers twice the highest circuit resonance
DEFAULT_NOISE_TOL = 1e-3


@lru_cache(maxsize=256)
def engine_channels(R: float, T: float, band: float = DEFAULT_NOISE_BAND, tol: float = DEFAULT_NOISE_TOL) -> NoiseChannelSet:
    """Cached AAA channel set for a resistor (R, T) on the engine band."""
    return aaa_channels(PsdTarget(R, T), band, tol)


def engine_channel_map(netlist: Netlist, band: float = DEFAULT_NOISE_BAND, tol: float = DEFAULT_NOISE_TOL):
    out = {}
    for d in netlist.dissipators():
        R = d.R if isinstance(d, Resistor) else d.Z0
        out[d.label] = engine_channels(R, d.T, band, tol)
    return out


def default_netlist_path() -> Path:
    return Path(str(importlib.resources.files("ottoflux").joinpath("data/engine_table2.json")))


def write_engine_json(path: str | Path, phi_ext_over_phi0: float = 0.0):
    """Write the canonical netlist file (regenerates the shipped default)."""
    p = ENGINE_PARAMS
    x = p["loop_fraction"]

    def cap(label, j, k, f):
        return {"type": "capacitor", "label": label, "j": j, "k": k, "C": f"{f / 1e-15:.10g} fF"}

    def cpw(label, j, k, f_half):
        return {
            "type": "cpw_segment",
            "label": label,
            "j": j,
            "k": k,
            "Z": f"{p['Z_line']:.10g} Ohm",
            "f_half": f"{f_half / 1e9:.10g} GHz",
            "n_aux": 2,
        }

    doc = {
        "description": "Autonomous heat-engine circuit, fitted parameter set",
        "nodes": [
            {"id": i, "label": lbl, "ground": i == 0}
            for i, lbl in enumerate(
                [
                    "gnd",
                    "hot_port",
                    "hot_in",
                    "hot_out",
                    "wb_in",
                    "squid_top",
                    "squid_tap",
                    "drv_mid",
                    "drv_head",
                    "feed",
                    "cold_in",
                    "cold_out",
                    "cold_port",
                ]
            )
        ],
        "elements": [
            {"type": "port", "label": "port_hot", "node": 1, "Z0": "50 Ohm", "T": "20 mK"},
            cap("C_h_out", 1, 2, p["C_h_out"]),
            cpw("cpw_h", 2, 3, p["f_half_h"]),
            cap("C_h_cpl", 3, 4, p["C_h_cpl"]),
            cpw("cpw_a", 4, 5, p["f_half_a"]),
            {"type": "josephson_junction", "label": "J1", "j": 5, "k": 6, "Ic": "1.39 uA"},
            {"type": "josephson_junction", "label": "J2", "j": 5, "k": 0, "Ic": "1.44 uA"},
            {"type": "inductor", "label": "L_loop", "j": 6, "k": 0, "L": f"{x * p['L_cpl'] / 1e-9:.10g} nH"},
            cpw("cpw_b", 7, 6, p["f_half_b"]),
            {"type": "inductor", "label": "L_lead", "j": 8, "k": 7, "L": f"{(1 - x) * p['L_cpl'] / 1e-9:.10g} nH"},
            cap("C_PPC", 8, 0, p["C_ppc"]),
            {"type": "resistor", "label": "R_b", "j": 8, "k": 0, "R": "42.24 kOhm", "T": "20 mK"},
            cap("C_b_out", 8, 9, p["C_b_out"]),
            {"type": "port", "label": "port_feed_in", "node": 9, "Z0": "50 Ohm", "T": "20 mK"},
            {"type": "port", "label": "port_feed_out", "node": 9, "Z0": "50 Ohm", "T": "20 mK"},
            cap("C_c_cpl", 4, 10, p["C_c_cpl"]),
            cpw("cpw_c", 10, 11, p["f_half_c"]),
            cap("C_c_out", 11, 12, p["C_c_out"]),
            {"type": "port", "label": "port_cold", "node": 12, "Z0": "50 Ohm", "T": "20 mK"},
            {"type": "inductor", "label": "L_gnd_hot", "j": 1, "k": 0, "L": "1 uH"},
            {"type": "inductor", "label": "L_tie_hline", "j": 2, "k": 1, "L": "1 uH"},
            {"type": "inductor", "label": "L_gnd_feed", "j": 9, "k": 0, "L": "1 uH"},
            {"type": "inductor", "label": "L_tie_cline", "j": 10, "k": 12, "L": "1 uH"},
            {"type": "inductor", "label": "L_gnd_cold", "j": 12, "k": 0, "L": "1 uH"},
        ],
        "flux_bias": {"loop_inductor": LOOP_INDUCTOR, "phi_ext_over_phi0": phi_ext_over_phi0},
    }
    Path(path).write_text(json.dumps(doc, indent=1))
