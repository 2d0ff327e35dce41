"""Linearization around stationary states: transmission and stability maps.

Probing is linear response: the mean-block linearization A_eff (junction
sines replaced by their Gaussian-damped cosines at the stationary point)
is solved in the frequency domain with the measured port resistors detached,
and the ports are reattached analytically by the impedance-to-scattering
conversion at reference Z0.

Stability analysis uses the full Jacobian of the coupled (mean, covariance)
dynamics in symmetric-covariance (vech) coordinates: engine gain lives in
the mean-covariance coupling, which the mean block alone cannot see.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import constants as K
from .assembly import StateSpaceSystem, build_state_space
from .dynamics import GaussianState, StationarySolveError, effective_drift_matrix, find_stationary
from .netlist import Netlist
from .noise import NoiseChannelSet


@dataclass(frozen=True)
class LinearizedSystem:
    """Linearization of the moment dynamics at a stationary point."""

    A_eff: np.ndarray
    stationary: GaussianState
    theta: tuple[float, ...]  # junction drive arguments q.m*
    gamma: tuple[float, ...]  # junction variance arguments q.C.q*
    system: StateSpaceSystem
    port_nodes: dict[str, int] = field(default_factory=dict)
    Z0: float = 50.0
    jacobian: np.ndarray | None = None  # full coupled Jacobian, vech coords


def _vech_indices(d: int):
    rows, cols = np.tril_indices(d)
    return rows, cols


def vech(S: np.ndarray) -> np.ndarray:
    r, c = _vech_indices(S.shape[0])
    return S[r, c]


def unvech(v: np.ndarray, d: int) -> np.ndarray:
    S = np.zeros((d, d))
    r, c = _vech_indices(d)
    S[r, c] = v
    S[c, r] = v
    return S


def coupled_jacobian(system: StateSpaceSystem, state: GaussianState) -> np.ndarray:
    """Analytic Jacobian of the stacked (mean, vech(C)) right-hand side.

    Coordinates: z = [m, vech(C)] with vech the lower triangle, so the
    coupled dimension is d + d(d+1)/2.
    """
    d = system.dim
    m, C = state.mean, state.cov
    r, c = _vech_indices(d)
    nv = len(r)
    A_eff = effective_drift_matrix(system, m, C)

    J = np.zeros((d + nv, d + nv))
    J[:d, :d] = A_eff

    # Lyapunov operator of A_eff on vech coordinates, built column-wise:
    # perturbing vech entry (a,b) perturbs C by E_ab = e_a e_b^T + e_b e_a^T
    # (a != b) or e_a e_a^T; response is A_eff E + E A_eff^T.
    Acols = A_eff  # column view
    for col in range(nv):
        a, b = r[col], c[col]
        R = np.outer(Acols[:, a], _unit(d, b)) + np.outer(Acols[:, b], _unit(d, a))
        if a != b:
            pass  # E_ab already symmetric with both terms
        else:
            R = np.outer(Acols[:, a], _unit(d, a))
        R = R + R.T
        J[d:, d + col] = R[r, c]

    # Junction corrections.
    for p, q, _ in system.junctions:
        theta = float(q @ m)
        gamma = float(q @ C @ q)
        s, co, e = math.sin(theta), math.cos(theta), math.exp(-0.5 * gamma)
        Cq = C @ q
        H = np.outer(p, Cq) + np.outer(Cq, p)  # (p q^T C + C q p^T) / e-free части
        # vech weights of the bilinear form q^T X q: (2 - delta_ab) q_a q_b
        w = q[r] * q[c] * np.where(r == c, 1.0, 2.0)

        # dF_mean/dC: p * s * e * (-1/2) q^T X q
        J[:d, d:] += np.outer(p * (-0.5 * s * e), w)
        # dF_cov/dm: H * e * (-s) * (q . dm)
        J[d:, :d] += np.outer((H * e)[r, c], -s * q)
        # dF_cov/dC beyond the Lyapunov(A_eff) part: H*c*e * (-1/2) q^T X q
        J[d:, d:] += np.outer((H * (co * e))[r, c], -0.5 * w)

    return J


def _unit(d, i):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def coupled_rhs(system: StateSpaceSystem, z: np.ndarray, d: int) -> np.ndarray:
    """Stacked rhs on (m, vech(C)) coordinates; used for FD Jacobian checks."""
    from .dynamics import raw_state, rhs_cov, rhs_mean

    st = raw_state(z[:d], unvech(z[d:], d))
    return np.concatenate([rhs_mean(system, st), vech(rhs_cov(system, st))])


def linearize(system: StateSpaceSystem, stationary: GaussianState, full: bool = True) -> LinearizedSystem:
    """Linearize at a stationary point; ``full=False`` skips the big Jacobian."""
    thetas, gammas = [], []
    for _p, q, _ in system.junctions:
        thetas.append(float(q @ stationary.mean))
        gammas.append(float(q @ stationary.cov @ q))
    A_eff = effective_drift_matrix(system, stationary.mean, stationary.cov)
    J = coupled_jacobian(system, stationary) if full else None
    ports = {p.label: p.node for p in system.netlist.ports()}
    Z0 = system.netlist.ports()[0].Z0 if ports else 50.0
    return LinearizedSystem(A_eff, stationary, tuple(thetas), tuple(gammas), system, ports, Z0, J)


# --------------------------------------------------------------- two-port Z/S


class _DetachedMean:
    """Mean-block linear model with a chosen port pair's resistors removed."""

    def __init__(self, netlist: Netlist, port_pair: tuple[str, str]):
        self.port_pair = port_pair
        self.ports = {p.label: p for p in netlist.ports()}
        for lbl in port_pair:
            if lbl not in self.ports:
                raise KeyError(f"no port labeled {lbl!r}")
        detached = netlist.without_elements(set(port_pair))
        self.system = build_state_space(detached, None)  # silent: mech block only
        imap = self.system.index_map
        Minv = np.linalg.inv(self.system.mass_matrix_record)
        self._drive = {}
        self._sense = {}
        for lbl in port_pair:
            node = self.ports[lbl].node
            u = np.zeros(self.system.dim)
            e = np.zeros(imap.n_acc)
            e[imap.acc_node[node]] = 1.0
            acc = Minv @ e
            for nid, row in imap.acc_node.items():
                u[imap.dphi[nid]] += acc[row]
            for key, row in imap.acc_chi.items():
                u[imap.dchi[key]] += acc[row]
            self._drive[lbl] = u
            self._sense[lbl] = imap.dphi[node]

    def a_eff(self, junction_factors: list[float]) -> np.ndarray:
        A = self.system.A.copy()
        for (p, q, _), f in zip(self.system.junctions, junction_factors):
            A += np.outer(p, q) * f
        return A

    def drive_and_sense(self, label: str):
        return self._drive[label], self._sense[label]


def two_port_impedance(
    lin: LinearizedSystem,
    omega: float,
    ports: tuple[str, str],
    detached: _DetachedMean | None = None,
) -> np.ndarray:
    """2x2 impedance matrix Z_ab(omega) [Ohm], omega in rad/s.

    Unit current is injected at port b's node with the other port open
    (both port resistors detached);  Z_ab = V_a / I_b from the resolvent of
    the mean-block linearization.
    """
    det = detached or _DetachedMean(lin.system.netlist, ports)
    factors = [math.cos(t) * math.exp(-0.5 * g) for t, g in zip(lin.theta, lin.gamma)]
    A = det.a_eff(factors)
    w_int = omega / K.FREQ_SCALE
    d = A.shape[0]
    lhs = 1j * w_int * np.eye(d) - A
    rhs = np.stack([det.drive_and_sense(p)[0] for p in ports], axis=1)
    sol = np.linalg.solve(lhs, rhs)
    sense = [det.drive_and_sense(p)[1] for p in ports]
    Z = np.array([[sol[sense[a], b] for b in range(2)] for a in range(2)])
    return Z * K.RES_SCALE


def s_parameters(Z: np.ndarray, Z0: float) -> np.ndarray:
    """Impedance-to-scattering conversion S = (Z - Z0 I)(Z + Z0 I)^-1."""
    I = np.eye(Z.shape[0])
    return np.linalg.solve((Z + Z0 * I).T, (Z - Z0 * I).T).T


# ------------------------------------------------------------------- sweeps


@dataclass
class TransmissionMap:
    flux_grid: np.ndarray  # Phi_ext / Phi0
    freq_grid: np.ndarray  # Hz
    s21: np.ndarray  # complex (n_flux, n_freq)
    port_pair: tuple[str, str]
    valid: np.ndarray  # bool per flux point

    def __post_init__(self):
        if self.s21.shape != (len(self.flux_grid), len(self.freq_grid)):
            raise ValueError("s21 grid shape mismatch")


@dataclass
class StabilityMap:
    temp_grid: np.ndarray  # K
    flux_grid: np.ndarray  # Phi_ext / Phi0
    growth_rate: np.ndarray  # 1/s, max real part of driving-resonator modes
    valid: np.ndarray
    diagnostics: list = field(default_factory=list)


def transmission_sweep(
    netlist: Netlist,
    noise_channels: dict[str, NoiseChannelSet],
    flux_grid,
    freq_grid_hz,
    port_pair: tuple[str, str],
    loop_inductor: str,
    full_jacobian: bool = False,
    progress=None,
) -> TransmissionMap:
    """S21 over a (flux, frequency) grid with per-flux stationary relinearization.

    Per-point stationary failures mark the flux row invalid rather than
    aborting the sweep.  The previous flux point seeds the next stationary
    solve (continuation).
    """
    flux_grid = np.asarray(flux_grid, float)
    freq_grid_hz = np.asarray(freq_grid_hz, float)
    Phi0 = netlist.constants.Phi0
    s21 = np.full((len(flux_grid), len(freq_grid_hz)), np.nan + 0j)
    valid = np.zeros(len(flux_grid), bool)
    det = _DetachedMean(netlist, port_pair)
    Z0 = det.ports[port_pair[0]].Z0
    guess = None
    for i, phi in enumerate(flux_grid):
        net_f = netlist.with_flux(loop_inductor, phi * Phi0)
        system = build_state_space(net_f, noise_channels)
        try:
            st = find_stationary(system, guess)
        except StationarySolveError:
            guess = None
            continue
        guess = st
        lin = linearize(system, st, full=False)
        factors = [math.cos(t) * math.exp(-0.5 * g) for t, g in zip(lin.theta, lin.gamma)]
        A = det.a_eff(factors)
        u0, s0 = det.drive_and_sense(port_pair[0])
        u1, s1 = det.drive_and_sense(port_pair[1])
        rhs = np.stack([u0, u1], axis=1)
        d = A.shape[0]
        eye = np.eye(d)
        for k, f in enumerate(freq_grid_hz):
            w_int = 2.0 * math.pi * f / K.FREQ_SCALE
            sol = np.linalg.solve(1j * w_int * eye - A, rhs)
            Z = np.array([[sol[s0, 0], sol[s0, 1]], [sol[s1, 0], sol[s1, 1]]]) * K.RES_SCALE
            S = s_parameters(Z, Z0)
            s21[i, k] = S[1, 0]
        valid[i] = True
        if progress:
            progress(i, len(flux_grid))
    return TransmissionMap(flux_grid, freq_grid_hz, s21, port_pair, valid)


# ------------------------------------------------------------------ stability


def growth_rate_point(
    system: StateSpaceSystem,
    stationary: GaussianState,
    driving_node: str,
    overlap_threshold: float = 0.2,
    n_candidates: int = 80,
) -> tuple[float, str]:
    """Max growth rate (1/s) of modes overlapping the driving-resonator flux.

    Eigenvalues of the full coupled Jacobian are scanned in descending real
    part; each candidate's eigenvector (inverse iteration) is tested for
    normalized weight on the driving-resonator flux coordinate.  Returns
    (rate, diagnostic); diagnostic is non-empty when identification failed.
    """
    J = coupled_jacobian(system, stationary)
    d = system.dim
    lam = scipy.linalg.eigvals(J, check_finite=False)
    idx_flux = system.phi_index(driving_node)
    idx_vel = system.vel_index(driving_node)
    order = np.argsort(-lam.real)
    n = J.shape[0]
    eye = np.eye(n)
    seen = []
    for ii in order[: min(n_candidates, n)]:
        lv = lam[ii]
        if any(abs(lv - s) < 1e-12 * max(1.0, abs(lv)) for s in seen):
            continue
        seen.append(lv)
        shift = lv + 1e-8 * max(1.0, abs(lv)) * (1 + 1j)
        try:
            lu = scipy.linalg.lu_factor(J - shift * eye, check_finite=False)
        except scipy.linalg.LinAlgError:
            continue
        rng = np.random.default_rng(12345)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        for _ in range(3):
            v = scipy.linalg.lu_solve(lu, v, check_finite=False)
            v /= np.linalg.norm(v)
        # overlap within the mean block: covariance components are slaved
        # response and would dilute the normalization arbitrarily
        mean_norm = np.linalg.norm(v[:d])
        if mean_norm < 1e-9:
            continue
        overlap = math.hypot(abs(v[idx_flux]), abs(v[idx_vel])) / mean_norm
        if overlap > overlap_threshold:
            return float(lv.real) * K.FREQ_SCALE, ""
    return float(lam.real.max()) * K.FREQ_SCALE, "no eigenvector exceeded the overlap threshold"


def stability_map(
    netlist: Netlist,
    channel_factory,
    temp_grid,
    flux_grid,
    hot_label: str,
    loop_inductor: str,
    driving_node: str,
    progress=None,
) -> StabilityMap:
    """Growth-rate map over (T_h, flux).

    ``channel_factory(R_ohm, T_K) -> NoiseChannelSet`` supplies noise for
    every dissipator; the hot reservoir's temperature is swept via
    ``hot_label``.  Failures (no stationary state, ambiguous mode
    identification) mark points and are reported in ``diagnostics``.
    """
    temp_grid = np.asarray(temp_grid, float)
    flux_grid = np.asarray(flux_grid, float)
    Phi0 = netlist.constants.Phi0
    growth = np.full((len(temp_grid), len(flux_grid)), np.nan)
    valid = np.zeros(growth.shape, bool)
    diags = []
    for a, T_h in enumerate(temp_grid):
        net_T = netlist.with_temperature(hot_label, T_h)
        channels = {dd.label: channel_factory(dd.R if hasattr(dd, "R") else dd.Z0, dd.T) for dd in net_T.dissipators()}
        guess = None
        for b, phi in enumerate(flux_grid):
            net_f = net_T.with_flux(loop_inductor, phi * Phi0)
            system = build_state_space(net_f, channels)
            try:
                st = find_stationary(system, guess)
            except StationarySolveError as exc:
                diags.append((float(T_h), float(phi), f"stationary: {exc}"))
                guess = None
                continue
            guess = st
            rate, diag = growth_rate_point(system, st, driving_node)
            growth[a, b] = rate
            valid[a, b] = not diag
            if diag:
                diags.append((float(T_h), float(phi), diag))
            if progress:
                progress(a * len(flux_grid) + b, growth.size)
    return StabilityMap(temp_grid, flux_grid, growth, valid, diags)
