"""Parsing of unit-suffixed quantity strings used in netlist files.

Netlist JSON stores every physical value as a string with an explicit unit
suffix, e.g. ``"25.86 fF"`` or ``"42.24 kOhm"``.  Parsing returns plain SI
floats; bare numbers are rejected so that files stay self-describing.
"""

from __future__ import annotations

import re

_PREFIXES = {
    "a": 1e-18,
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "µ": 1e-6,
    "m": 1e-3,
    "": 1.0,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
    "T": 1e12,
}

# Base units and the dimension tag they resolve to.
_BASE_UNITS = {
    "F": "capacitance",
    "H": "inductance",
    "Ohm": "resistance",
    "ohm": "resistance",
    "Ω": "resistance",
    "Hz": "frequency",
    "A": "current",
    "V": "voltage",
    "K": "temperature",
    "W": "power",
    "Wb": "flux",
    "s": "time",
    "dBm": "power_dbm",
}

_QTY_RE = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?[0-9]+)?)\s*([A-Za-zµΩ]+)\s*$")


class UnitError(ValueError):
    pass


def _split_unit(unit: str) -> tuple[float, str]:
    # Longest base-unit match wins so that "mOhm" parses as milli-Ohm and
    # "Ohm" as bare Ohm rather than milli-"hm".
    for base in sorted(_BASE_UNITS, key=len, reverse=True):
        if unit.endswith(base):
            prefix = unit[: -len(base)]
            if prefix in _PREFIXES:
                return _PREFIXES[prefix], _BASE_UNITS[base]
    raise UnitError(f"unknown unit suffix {unit!r}")


def parse_quantity(text: str, expect: str | None = None) -> float:
    """Parse ``"<number> <unit>"`` into an SI float.

    Parameters
    ----------
    text : str
        Quantity string, e.g. ``"10.69 GHz"``.
    expect : str, optional
        Required dimension tag (``"capacitance"``, ``"inductance"``,
        ``"resistance"``, ``"frequency"``, ``"current"``, ``"temperature"``,
        ...).  A mismatch raises :class:`UnitError`.
    """
    if isinstance(text, (int, float)):
        raise UnitError(f"bare number {text!r}: netlist values need a unit suffix")
    m = _QTY_RE.match(text)
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    scale, dim = _split_unit(m.group(2))
    if expect is not None and dim != expect:
        raise UnitError(f"{text!r}: expected a {expect}, got a {dim}")
    return value * scale


def format_quantity(value_si: float, dim: str) -> str:
    """Render an SI value with a sensible suffix (used when writing files)."""
    units = {
        "capacitance": ("F", 1e-15, "f"),
        "inductance": ("H", 1e-9, "n"),
        "resistance": ("Ohm", 1.0, ""),
        "frequency": ("Hz", 1e9, "G"),
        "current": ("A", 1e-6, "u"),
        "temperature": ("K", 1e-3, "m"),
    }
    base, scale, prefix = units[dim]
    return f"{value_si / scale:.10g} {prefix}{base}"
