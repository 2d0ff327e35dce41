"""Assembly of circuit equations of motion into a first-order stochastic system.

Current laws (node fluxes phi, element between nodes j and k):

    capacitor   I_jk = C (ddphi_j - ddphi_k)
    inductor    I_jk = (phi_j - phi_k - Phi_bias) / L
    junction    I_jk = Ic sin(2 pi (phi_j - phi_k) / Phi0)
    resistor    I_jk = (dphi_j - dphi_k) / R

A CPW segment is distributed; with auxiliary standing-wave coordinates
chi_n (n = 1..N) its terminal currents are

    I_jk = pi (2 ddphi_j + ddphi_k) / (6 Z w) + w (phi_j - phi_k) / (pi Z)
           + sum_n ddchi_n / n
    I_kj = pi (2 ddphi_k + ddphi_j) / (6 Z w) + w (phi_k - phi_j) / (pi Z)
           + sum_n (-1)^(n+1) ddchi_n / n

with w the half-wavelength angular frequency, and each chi_n obeying

    ddchi_n + n^2 w^2 chi_n + 2 (ddphi_j + (-1)^(n+1) ddphi_k) / (pi w Z n) = 0.

The far-terminal weight (-1)^(n+1) is fixed by requiring the truncation to
converge to the exact line admittance -i cot / Z, i csc / Z (the partial
fractions of cot and csc); the truncation is then accurate up to
frequencies ~ N w.

Writing Kirchhoff's law at every non-ground node plus the chi equations
gives  M u = F(x, noise)  with u the vector of accelerations.  Assembly
inverts M once and emits the first-order form

    dx/dt = A x - x_ext + sum_j p_j sin(q_j^T x) + B xi(t)

on the state x = (phi, dphi, chi, dchi, eta), where eta are the
Ornstein-Uhlenbeck noise states (d eta/dt = -nu eta + xi) that unravel each
resistor's colored quantum noise (see :mod:`ottoflux.noise`).

Everything here works in the internal unit system (:mod:`ottoflux.constants`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants as K
from .netlist import (
    Capacitor,
    CpwSegment,
    Element,
    Inductor,
    JosephsonJunction,
    Netlist,
    Port,
    Resistor,
)
from .noise import NoiseChannelSet


class AssemblyError(RuntimeError):
    pass


class ConfigurationError(ValueError):
    pass


# --------------------------------------------------------------- element laws


@dataclass
class LocalState:
    """Terminal state handed to :func:`element_current`.

    Any consistent unit system works; pass SI for SI results.  Fields that a
    law does not use may stay ``None``; passing accelerations to laws that
    must not see them is rejected.
    """

    phi: tuple[float, float] | None = None
    dphi: tuple[float, float] | None = None
    ddphi: tuple[float, float] | None = None
    chi_ddot: np.ndarray | None = None  # CPW auxiliary accelerations, index n-1


def element_current(element: Element, local: LocalState, constants=None) -> float | tuple[float, float]:
    """Evaluate one element's current law.

    Returns the current I_jk flowing from terminal j to terminal k; for a
    :class:`CpwSegment` returns the pair ``(I_jk, I_kj)`` (the distributed
    element is not antisymmetric).
    """
    if isinstance(element, Capacitor):
        if local.ddphi is None:
            raise ValueError("capacitor law needs terminal accelerations")
        return element.C * (local.ddphi[0] - local.ddphi[1])
    if isinstance(element, Inductor):
        if local.ddphi is not None:
            raise ValueError("inductor law does not use accelerations")
        return (local.phi[0] - local.phi[1] - element.flux_bias) / element.L
    if isinstance(element, JosephsonJunction):
        if local.ddphi is not None:
            raise ValueError("junction law does not use accelerations")
        Phi0 = (constants or K.SI).Phi0
        return element.Ic * math.sin(2.0 * math.pi * (local.phi[0] - local.phi[1]) / Phi0)
    if isinstance(element, (Resistor, Port)):
        if local.ddphi is not None:
            raise ValueError("resistor law does not use accelerations")
        R = element.R if isinstance(element, Resistor) else element.Z0
        return (local.dphi[0] - local.dphi[1]) / R
    if isinstance(element, CpwSegment):
        if local.ddphi is None or local.phi is None or local.chi_ddot is None:
            raise ValueError("CPW law needs phi, ddphi and chi_ddot")
        Z, w = element.Z, element.omega_half
        cap = math.pi / (6.0 * Z * w)
        ind = w / (math.pi * Z)
        i_jk = cap * (2.0 * local.ddphi[0] + local.ddphi[1]) + ind * (local.phi[0] - local.phi[1])
        i_kj = cap * (2.0 * local.ddphi[1] + local.ddphi[0]) + ind * (local.phi[1] - local.phi[0])
        for n, cdd in enumerate(local.chi_ddot, start=1):
            i_jk += cdd / n
            i_kj += ((-1.0) ** (n + 1)) * cdd / n
        return i_jk, i_kj
    raise TypeError(f"unknown element {element!r}")


# ---------------------------------------------------------------- index map


@dataclass(frozen=True)
class StateIndexMap:
    """Positions of every degree of freedom in the state vector.

    Layout: ``[phi (per non-ground node), dphi, (chi, dchi) per CPW aux mode,
    eta per noise channel]``.  Acceleration coordinates (for the mass matrix)
    are ordered ``[node accelerations, chi accelerations]``.
    """

    phi: dict[int, int]  # node id -> state index
    dphi: dict[int, int]
    chi: dict[tuple[str, int], int]  # (segment label, n) -> state index
    dchi: dict[tuple[str, int], int]
    eta: dict[tuple[str, int], int]  # (dissipator label, channel) -> state index
    acc_node: dict[int, int]  # node id -> acceleration-row index
    acc_chi: dict[tuple[str, int], int]
    dim: int
    labels: tuple[str, ...] = field(default=())

    @property
    def n_mech(self) -> int:
        return 2 * len(self.phi) + 2 * len(self.chi)

    @property
    def n_acc(self) -> int:
        return len(self.acc_node) + len(self.acc_chi)


def build_index_map(netlist: Netlist) -> StateIndexMap:
    nodes_ng = [n for n in netlist.nodes if not n.is_ground]
    n_ng = len(nodes_ng)
    phi = {n.id: i for i, n in enumerate(nodes_ng)}
    dphi = {n.id: n_ng + i for i, n in enumerate(nodes_ng)}
    labels = [f"phi_{n.label}" for n in nodes_ng] + [f"dphi_{n.label}" for n in nodes_ng]

    chi, dchi = {}, {}
    pos = 2 * n_ng
    for e in netlist.elements:
        if isinstance(e, CpwSegment):
            for n in range(1, e.n_aux + 1):
                chi[(e.label, n)] = pos
                dchi[(e.label, n)] = pos + 1
                labels += [f"chi{n}_{e.label}", f"dchi{n}_{e.label}"]
                pos += 2

    eta = {}
    # Channel counts are attached later (build_state_space); validate-time
    # maps carry no eta entries.
    acc_node = {n.id: i for i, n in enumerate(nodes_ng)}
    acc_chi = {}
    a = n_ng
    for e in netlist.elements:
        if isinstance(e, CpwSegment):
            for n in range(1, e.n_aux + 1):
                acc_chi[(e.label, n)] = a
                a += 1
    return StateIndexMap(phi, dphi, chi, dchi, eta, acc_node, acc_chi, pos, tuple(labels))


# ---------------------------------------------------------------- mass matrix


def build_mass_matrix(netlist: Netlist, index_map: StateIndexMap | None = None) -> np.ndarray:
    """Generalized mass matrix on acceleration coordinates (internal units)."""
    imap = index_map or build_index_map(netlist)
    n_acc = imap.n_acc
    M = np.zeros((n_acc, n_acc))
    ground = netlist.ground.id

    def node_row(nid):
        return None if nid == ground else imap.acc_node[nid]

    for e in netlist.elements:
        if isinstance(e, Capacitor):
            C = e.C / K.CAP_SCALE
            rj, rk = node_row(e.j), node_row(e.k)
            if rj is not None:
                M[rj, rj] += C
                if rk is not None:
                    M[rj, rk] -= C
            if rk is not None:
                M[rk, rk] += C
                if rj is not None:
                    M[rk, rj] -= C
        elif isinstance(e, CpwSegment):
            Z = e.Z / K.RES_SCALE
            w = e.omega_half / K.FREQ_SCALE
            m0 = math.pi / (6.0 * Z * w)
            rj, rk = node_row(e.j), node_row(e.k)
            for row, near, far in ((rj, e.j, e.k), (rk, e.k, e.j)):
                if row is None:
                    continue
                M[row, row] += 2.0 * m0
                rfar = node_row(far)
                if rfar is not None:
                    M[row, rfar] += m0
                k_side = near == e.k  # k-side terminal carries (-1)^(n+1) signs
                for n in range(1, e.n_aux + 1):
                    s = (-1.0) ** (n + 1) if k_side else 1.0
                    M[row, imap.acc_chi[(e.label, n)]] += s / n
            for n in range(1, e.n_aux + 1):
                row = imap.acc_chi[(e.label, n)]
                M[row, row] += 1.0
                g = 2.0 / (math.pi * w * Z * n)
                if rj is not None:
                    M[row, rj] += g
                if rk is not None:
                    M[row, rk] += g * ((-1.0) ** (n + 1))
    return M


# ------------------------------------------------------------------ validate


@dataclass(frozen=True)
class Diagnostic:
    rule: str
    message: str
    label: str = ""

    def __str__(self):
        where = f" [{self.label}]" if self.label else ""
        return f"{self.rule}: {self.message}{where}"


def validate_netlist(netlist: Netlist) -> list[Diagnostic]:
    """Check every netlist invariant; empty list means valid."""
    out: list[Diagnostic] = []
    ids = sorted(n.id for n in netlist.nodes)
    if ids != list(range(len(ids))):
        out.append(Diagnostic("node-ids", f"node ids must be contiguous from 0, got {ids}"))
    grounds = [n for n in netlist.nodes if n.is_ground]
    if len(grounds) != 1:
        out.append(Diagnostic("ground", f"exactly one ground node required, found {len(grounds)}"))
    known = {n.id for n in netlist.nodes}

    for e in netlist.elements:
        terms = netlist.terminals(e)
        for t in terms:
            if t not in known:
                out.append(Diagnostic("terminal", f"references unknown node {t}", e.label))
        if len(terms) == 2 and terms[0] == terms[1]:
            out.append(Diagnostic("terminal", "two-terminal element needs j != k", e.label))
        params = {
            Capacitor: ("C",),
            Inductor: ("L",),
            JosephsonJunction: ("Ic",),
            Resistor: ("R", "T"),
            CpwSegment: ("Z", "omega_half"),
            Port: ("Z0", "T"),
        }[type(e)]
        for p in params:
            v = getattr(e, p)
            ok = v >= 0.0 if p == "T" else v > 0.0
            if not ok:
                out.append(Diagnostic("parameter", f"{p} = {v} must be {'>= 0' if p == 'T' else '> 0'}", e.label))
        if isinstance(e, CpwSegment) and e.n_aux < 1:
            out.append(Diagnostic("parameter", f"n_aux = {e.n_aux} must be >= 1", e.label))

    labels = [e.label for e in netlist.elements if e.label]
    dup = {l for l in labels if labels.count(l) > 1}
    if dup:
        out.append(Diagnostic("labels", f"duplicate element labels {sorted(dup)}"))

    if out:
        return out  # structural problems make the graph checks meaningless

    # Connectivity (ports tie their node to ground through Z0).
    adj: dict[int, set[int]] = {n.id: set() for n in netlist.nodes}
    gid = netlist.ground.id
    for e in netlist.elements:
        terms = netlist.terminals(e)
        if len(terms) == 1:
            terms = (terms[0], gid)
        adj[terms[0]].add(terms[1])
        adj[terms[1]].add(terms[0])
    seen = {gid}
    stack = [gid]
    while stack:
        for m in adj[stack.pop()]:
            if m not in seen:
                seen.add(m)
                stack.append(m)
    for n in netlist.nodes:
        if n.id not in seen:
            out.append(Diagnostic("connectivity", f"node {n.id} ({n.label}) is disconnected from ground"))
    if out:
        return out

    # Mass-matrix invertibility: every non-ground node needs capacitive mass.
    imap = build_index_map(netlist)
    M = build_mass_matrix(netlist, imap)
    if imap.n_acc:
        svals = np.linalg.svd(M, compute_uv=False)
        cond = svals[0] / svals[-1] if svals[-1] > 0 else np.inf
        if cond > 1e12:
            null = np.linalg.svd(M)[2][-1]
            worst = int(np.argmax(np.abs(null[: len(imap.acc_node)]))) if len(imap.acc_node) else 0
            node = [n for n in netlist.nodes if not n.is_ground][worst]
            out.append(
                Diagnostic(
                    "mass-matrix",
                    f"singular mass matrix at node {node.id} ({node.label}); "
                    "every node needs a capacitive path (capacitor or CPW terminal)",
                )
            )
    return out


# ----------------------------------------------------------------- assembly


@dataclass(frozen=True)
class StateSpaceSystem:
    """First-order stochastic system  dx/dt = A x - x_ext + sum p sin(q.x) + B xi.

    All arrays are in internal units.  ``x_ext_unit`` is the bias image per
    unit of external flux (fWb) on the bias inductor, so sweeps rescale
    ``x_ext`` without reassembly.
    """

    A: np.ndarray
    x_ext: np.ndarray
    junctions: tuple[tuple[np.ndarray, np.ndarray, float], ...]  # (p, q, Ic)
    B: np.ndarray
    index_map: StateIndexMap
    mass_matrix_record: np.ndarray
    netlist: Netlist
    noise_channels: dict[str, NoiseChannelSet]
    drive_vectors: dict[str, np.ndarray]  # port label -> unit-current input vector

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def phi_index(self, node_label: str) -> int:
        return self.index_map.phi[self.netlist.node_by_label(node_label).id]

    def vel_index(self, node_label: str) -> int:
        return self.index_map.dphi[self.netlist.node_by_label(node_label).id]

    def drift(self, x: np.ndarray) -> np.ndarray:
        """Deterministic right-hand side at state x (no Gaussian factors)."""
        out = self.A @ x - self.x_ext
        for p, q, _ in self.junctions:
            out += p * math.sin(float(q @ x))
        return out


def silent_channels() -> NoiseChannelSet:
    """A zero-weight channel set (noiseless resistor)."""
    return NoiseChannelSet(c0_sq=0.0, channels=(), band_limit=0.0, max_rel_error=0.0, method="silent")


def build_state_space(
    netlist: Netlist,
    noise_channels: dict[str, NoiseChannelSet] | None,
) -> StateSpaceSystem:
    """Assemble the first-order system from a validated netlist.

    Parameters
    ----------
    netlist : Netlist
        Circuit description (SI values).
    noise_channels : dict or None
        One :class:`~ottoflux.noise.NoiseChannelSet` per resistor/port label.
        ``None`` assembles every noise source silent (deterministic system);
        with a dict, a missing entry is a configuration error.
    """
    diags = validate_netlist(netlist)
    if diags:
        raise AssemblyError("invalid netlist: " + "; ".join(map(str, diags)))

    dissipators = netlist.dissipators()
    if noise_channels is None:
        noise_channels = {d.label: silent_channels() for d in dissipators}
    for d in dissipators:
        if d.label not in noise_channels:
            raise ConfigurationError(f"no NoiseChannelSet supplied for resistor/port {d.label!r}")

    base = build_index_map(netlist)
    eta = {}
    pos = base.dim
    labels = list(base.labels)
    for d in dissipators:
        for m, _ch in enumerate(noise_channels[d.label].channels):
            eta[(d.label, m)] = pos
            labels.append(f"eta{m}_{d.label}")
            pos += 1
    imap = StateIndexMap(
        base.phi, base.dphi, base.chi, base.dchi, eta, base.acc_node, base.acc_chi, pos, tuple(labels)
    )

    M = build_mass_matrix(netlist, imap)
    n_acc = imap.n_acc
    if n_acc:
        svals = np.linalg.svd(M, compute_uv=False)
        if svals[-1] <= 0 or svals[0] / svals[-1] > 1e12:
            raise AssemblyError("mass matrix condition number exceeds 1e12")
        Minv = np.linalg.inv(M)
    else:
        Minv = np.zeros((0, 0))

    d = imap.dim
    ground = netlist.ground.id
    phi0 = K.INTERNAL.Phi0

    # Map acceleration coordinates to their state slots (velocity rows).
    vel_slot = np.empty(n_acc, dtype=int)
    for nid, row in imap.acc_node.items():
        vel_slot[row] = imap.dphi[nid]
    for key, row in imap.acc_chi.items():
        vel_slot[row] = imap.dchi[key]

    def scatter(acc_vec: np.ndarray, out: np.ndarray):
        out[vel_slot] += acc_vec

    # F = G x + c + junction terms + noise; build G on (acc x state).
    G = np.zeros((n_acc, d))
    c = np.zeros(n_acc)

    def node_row(nid):
        return None if nid == ground else imap.acc_node[nid]

    def phi_col(nid):
        return None if nid == ground else imap.phi[nid]

    def vel_col(nid):
        return None if nid == ground else imap.dphi[nid]

    for e in netlist.elements:
        if isinstance(e, Inductor):
            L = e.L / K.IND_SCALE
            bias = e.flux_bias / K.FLUX_SCALE
            for sgn, nid, other in ((1.0, e.j, e.k), (-1.0, e.k, e.j)):
                row = node_row(nid)
                if row is None:
                    continue
                # F[row] -= sgn * (phi_j - phi_k - bias)/L
                pj, pk = phi_col(e.j), phi_col(e.k)
                if pj is not None:
                    G[row, pj] -= sgn / L
                if pk is not None:
                    G[row, pk] += sgn / L
                c[row] += sgn * bias / L
        elif isinstance(e, (Resistor, Port)):
            if isinstance(e, Resistor):
                R, nj, nk = e.R / K.RES_SCALE, e.j, e.k
            else:
                R, nj, nk = e.Z0 / K.RES_SCALE, e.node, ground
            for sgn, nid in ((1.0, nj), (-1.0, nk)):
                row = node_row(nid)
                if row is None:
                    continue
                vj, vk = vel_col(nj), vel_col(nk)
                if vj is not None:
                    G[row, vj] -= sgn / R
                if vk is not None:
                    G[row, vk] += sgn / R
        elif isinstance(e, CpwSegment):
            Z = e.Z / K.RES_SCALE
            w = e.omega_half / K.FREQ_SCALE
            ind = w / (math.pi * Z)
            for sgn, nid in ((1.0, e.j), (-1.0, e.k)):
                row = node_row(nid)
                if row is None:
                    continue
                pj, pk = phi_col(e.j), phi_col(e.k)
                if pj is not None:
                    G[row, pj] -= sgn * ind
                if pk is not None:
                    G[row, pk] += sgn * ind
            for n in range(1, e.n_aux + 1):
                row = imap.acc_chi[(e.label, n)]
                G[row, imap.chi[(e.label, n)]] -= (n * w) ** 2

    # Noise: state-coupled part into G columns, white part into B.
    n_noise = sum(1 + len(noise_channels[dd.label].channels) for dd in dissipators)
    B = np.zeros((d, n_noise))
    col = 0
    for dd in dissipators:
        ch = noise_channels[dd.label]
        nj, nk = (dd.j, dd.k) if isinstance(dd, Resistor) else (dd.node, ground)
        w_acc = np.zeros(n_acc)
        rj, rk = node_row(nj), node_row(nk)
        if rj is not None:
            w_acc[rj] = 1.0
        if rk is not None:
            w_acc[rk] = -1.0
        minus_Minv_w = -(Minv @ w_acc)
        c0 = math.sqrt(max(ch.c0_sq, 0.0) / K.PSD_SCALE)
        B[vel_slot, col] += minus_Minv_w * c0
        col += 1
        for m, (c_sq, nu_si) in enumerate(ch.channels):
            cm = math.sqrt(max(c_sq, 0.0) / K.PSD_SCALE)
            nu = nu_si / K.FREQ_SCALE
            erow = imap.eta[(dd.label, m)]
            # noise current contains c_m * (-nu eta + xi); F -= w * current
            G[:, erow] += w_acc * (cm * nu)
            B[vel_slot, col] += minus_Minv_w * cm
            B[erow, col] = 1.0
            col += 1

    # First-order A.
    A = np.zeros((d, d))
    for nid, idx in imap.phi.items():
        A[idx, imap.dphi[nid]] = 1.0
    for key, idx in imap.chi.items():
        A[idx, imap.dchi[key]] = 1.0
    MG = Minv @ G
    A[vel_slot, :] += MG
    for dd in dissipators:
        ch = noise_channels[dd.label]
        for m, (_c_sq, nu_si) in enumerate(ch.channels):
            erow = imap.eta[(dd.label, m)]
            A[erow, erow] = -nu_si / K.FREQ_SCALE

    const = np.zeros(d)
    if n_acc:
        const[vel_slot] = Minv @ c
    x_ext = -const

    # Junctions.
    junctions = []
    for e in netlist.elements:
        if not isinstance(e, JosephsonJunction):
            continue
        Ic = e.Ic / K.CURRENT_SCALE
        w_acc = np.zeros(n_acc)
        rj, rk = node_row(e.j), node_row(e.k)
        if rj is not None:
            w_acc[rj] = 1.0
        if rk is not None:
            w_acc[rk] = -1.0
        p = np.zeros(d)
        p[vel_slot] = -(Minv @ w_acc) * Ic
        q = np.zeros(d)
        pj, pk = phi_col(e.j), phi_col(e.k)
        if pj is not None:
            q[pj] = 2.0 * math.pi / phi0
        if pk is not None:
            q[pk] = -2.0 * math.pi / phi0
        junctions.append((p, q, Ic))

    # Port drive vectors: unit current injected into the port node.
    drive = {}
    for p in netlist.ports():
        row = node_row(p.node)
        vec = np.zeros(d)
        if row is not None:
            e = np.zeros(n_acc)
            e[row] = 1.0
            vec[vel_slot] = Minv @ e
        drive[p.label] = vec

    return StateSpaceSystem(
        A=A,
        x_ext=x_ext,
        junctions=tuple(junctions),
        B=B,
        index_map=imap,
        mass_matrix_record=M,
        netlist=netlist,
        noise_channels=dict(noise_channels),
        drive_vectors=drive,
    )


# ------------------------------------------------------------- diagnostics


def kirchhoff_residual(system: StateSpaceSystem, x: np.ndarray) -> np.ndarray:
    """Per-node residual of Kirchhoff's law, relative to the largest current.

    Reconstructs every element current from the element laws using the
    accelerations implied by the assembled drift (junction terms included,
    white noise excluded but OU-state noise currents included) and sums them
    at each non-ground node.  Residuals should vanish to round-off.
    """
    net = system.netlist
    imap = system.index_map
    dx = system.drift(x)
    ground = net.ground.id

    def acc_of(nid):
        return 0.0 if nid == ground else dx[imap.dphi[nid]]

    def vel_of(nid):
        return 0.0 if nid == ground else x[imap.dphi[nid]]

    def phi_of(nid):
        return 0.0 if nid == ground else x[imap.phi[nid]]

    sums = {n.id: 0.0 for n in net.nodes if not n.is_ground}
    scale = 0.0
    const = K.INTERNAL
    for e in net.elements:
        if isinstance(e, CpwSegment):
            chi_ddot = np.array([dx[imap.dchi[(e.label, n)]] for n in range(1, e.n_aux + 1)])
            local = LocalState(
                phi=(phi_of(e.j), phi_of(e.k)),
                ddphi=(acc_of(e.j), acc_of(e.k)),
                chi_ddot=chi_ddot,
            )
            # element_current expects element values in the working unit
            # system; build an internal-unit copy.
            e_int = CpwSegment(e.j, e.k, e.Z / K.RES_SCALE, e.omega_half / K.FREQ_SCALE, e.n_aux, e.label)
            i_jk, i_kj = element_current(e_int, local, const)
            pair = ((e.j, i_jk), (e.k, i_kj))
        else:
            if isinstance(e, Capacitor):
                e_int = Capacitor(e.j, e.k, e.C / K.CAP_SCALE, e.label)
                local = LocalState(ddphi=(acc_of(e.j), acc_of(e.k)))
            elif isinstance(e, Inductor):
                e_int = Inductor(e.j, e.k, e.L / K.IND_SCALE, e.flux_bias / K.FLUX_SCALE, e.label)
                local = LocalState(phi=(phi_of(e.j), phi_of(e.k)))
            elif isinstance(e, JosephsonJunction):
                e_int = JosephsonJunction(e.j, e.k, e.Ic / K.CURRENT_SCALE, e.label)
                local = LocalState(phi=(phi_of(e.j), phi_of(e.k)))
            elif isinstance(e, Resistor):
                e_int = Resistor(e.j, e.k, e.R / K.RES_SCALE, e.T, e.label)
                local = LocalState(dphi=(vel_of(e.j), vel_of(e.k)))
            elif isinstance(e, Port):
                e_int = Resistor(e.node, ground, e.Z0 / K.RES_SCALE, e.T, e.label)
                local = LocalState(dphi=(vel_of(e.node), 0.0))
            else:  # pragma: no cover
                raise TypeError(e)
            i = element_current(e_int, local, const)
            pair = ((e_int.j, i), (e_int.k, -i))
        for nid, cur in pair:
            if nid != ground:
                sums[nid] += cur
            scale = max(scale, abs(cur))

    # OU noise-state currents of each dissipator.
    for dd in net.dissipators():
        ch = system.noise_channels[dd.label]
        nj, nk = (dd.j, dd.k) if isinstance(dd, Resistor) else (dd.node, ground)
        cur = 0.0
        for m, (c_sq, nu_si) in enumerate(ch.channels):
            cm = math.sqrt(max(c_sq, 0.0) / K.PSD_SCALE)
            nu = nu_si / K.FREQ_SCALE
            cur += cm * (-nu * x[imap.eta[(dd.label, m)]])
        if nj != ground:
            sums[nj] += cur
        if nk != ground:
            sums[nk] -= cur
        scale = max(scale, abs(cur))

    res = np.array([sums[n.id] for n in net.nodes if not n.is_ground])
    return res / max(scale, 1e-300)
