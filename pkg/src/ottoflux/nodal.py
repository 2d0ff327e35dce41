"""Direct AC phasor nodal analysis.

An independent frequency-domain solve used as an oracle for the state-space
linear-response path: build the complex node admittance matrix element by
element and solve Y V = I for injected phasor currents.  Josephson
junctions enter as linear inductors L = Phi0 / (2 pi Ic cos(theta)) at a
given operating phase.  CPW segments use either the same truncated
auxiliary-mode admittance as the assembly (default, for exact agreement)
or the exact transmission-line cot/csc form.
"""

from __future__ import annotations

import math

import numpy as np

from .netlist import Capacitor, CpwSegment, Inductor, JosephsonJunction, Netlist, Port, Resistor


def cpw_y_matrix(Z: float, omega_half: float, omega: float, n_aux: int | None) -> np.ndarray:
    """2x2 terminal admittance of a CPW segment at angular frequency omega.

    ``n_aux=None`` gives the exact lossless-line matrix
    Y = Y0 [[-i cot, i csc], [i csc, -i cot]] with electrical angle
    beta*l = pi omega / omega_half; an integer gives the N-mode truncation
    used by the assembly.
    """
    if n_aux is None:
        th = math.pi * omega / omega_half
        y0 = 1.0 / Z
        cot = math.cos(th) / math.sin(th)
        csc = 1.0 / math.sin(th)
        return np.array([[-1j * y0 * cot, 1j * y0 * csc], [1j * y0 * csc, -1j * y0 * cot]])
    w = omega_half
    for n in range(1, n_aux + 1):
        if abs(n * n * w * w - omega * omega) < 1e-9 * (n * w) ** 2:
            omega = omega * (1.0 + 1e-7)  # nudge off an internal chi resonance
    m0 = math.pi / (6.0 * Z * w)
    ind = w / (math.pi * Z)
    # I_j = -w^2 m0 (2 phi_j + phi_k) + ind (phi_j - phi_k) + sum chi-part
    a = -(omega**2) * m0 * 2.0 + ind
    b = -(omega**2) * m0 - ind
    Yp = np.array([[a, b], [b, a]], dtype=complex)
    for n in range(1, n_aux + 1):
        g = 2.0 * omega**4 / (math.pi * w * Z * n**2 * (n**2 * w**2 - omega**2))
        s = (-1.0) ** (n + 1)
        Yp -= g * np.array([[1.0, s], [s, 1.0]])
    # phi-to-V conversion: phi = V / (i omega)
    return Yp / (1j * omega)


def nodal_impedance(
    netlist: Netlist,
    omega: float,
    inject_nodes: list[int],
    junction_phases: dict[str, float] | None = None,
    detach_ports: set[str] = frozenset(),
    exact_cpw: bool = False,
    junction_factors: dict[str, float] | None = None,
) -> np.ndarray:
    """Impedance matrix between the injection nodes (SI units).

    Z[a, b] is the voltage at inject_nodes[a] per unit current into
    inject_nodes[b].  ``junction_phases`` maps junction labels to operating
    phases theta (default 0); ``junction_factors`` optionally scales each
    junction's linear stiffness (e.g. Gaussian damping factors), applied on
    top of cos(theta).
    """
    Phi0 = netlist.constants.Phi0
    ground = netlist.ground.id
    ids = [n.id for n in netlist.nodes if not n.is_ground]
    pos = {nid: i for i, nid in enumerate(ids)}
    n = len(ids)
    Y = np.zeros((n, n), dtype=complex)

    def stamp(j, k, y):
        if j != ground:
            Y[pos[j], pos[j]] += y
        if k != ground:
            Y[pos[k], pos[k]] += y
        if j != ground and k != ground:
            Y[pos[j], pos[k]] -= y
            Y[pos[k], pos[j]] -= y

    for e in netlist.elements:
        if isinstance(e, Capacitor):
            stamp(e.j, e.k, 1j * omega * e.C)
        elif isinstance(e, Inductor):
            stamp(e.j, e.k, 1.0 / (1j * omega * e.L))
        elif isinstance(e, Resistor):
            stamp(e.j, e.k, 1.0 / e.R)
        elif isinstance(e, Port):
            if e.label not in detach_ports:
                stamp(e.node, ground, 1.0 / e.Z0)
        elif isinstance(e, JosephsonJunction):
            theta = (junction_phases or {}).get(e.label, 0.0)
            factor = (junction_factors or {}).get(e.label, 1.0)
            stiff = (2.0 * math.pi * e.Ic / Phi0) * math.cos(theta) * factor  # 1/L
            stamp(e.j, e.k, stiff / (1j * omega))
        elif isinstance(e, CpwSegment):
            # Full two-port stamp: I_t = sum_u Y2[t, u] V_u.  Rows of
            # grounded terminals have no node equation; columns multiply
            # V = 0.  Either way the entry is dropped.
            Y2 = cpw_y_matrix(e.Z, e.omega_half, omega, None if exact_cpw else e.n_aux)
            terms = (e.j, e.k)
            for tj in range(2):
                for tk in range(2):
                    if terms[tj] != ground and terms[tk] != ground:
                        Y[pos[terms[tj]], pos[terms[tk]]] += Y2[tj, tk]
        else:  # pragma: no cover
            raise TypeError(e)

    rhs = np.zeros((n, len(inject_nodes)), dtype=complex)
    for b, nid in enumerate(inject_nodes):
        rhs[pos[nid], b] = 1.0
    V = np.linalg.solve(Y, rhs)
    return np.array([[V[pos[na], b] for b in range(len(inject_nodes))] for na in inject_nodes])
