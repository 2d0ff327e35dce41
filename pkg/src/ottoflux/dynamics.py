"""Gaussian-approximation moment dynamics and raw Langevin integration.

Averaging the stochastic system  dx/dt = A x - x_ext + sum_j p_j sin(q_j.x)
+ B xi(t)  over noise under a Gaussian closure gives a closed ODE system for
the mean m = <x> and covariance C = <(x-m)(x-m)^T>:

    dm/dt = A m - x_ext + sum_j p_j sin(q_j.m) exp(-q_j.C.q_j / 2)
    dC/dt = A_eff C + C A_eff^T + B B^T,
    A_eff = A + sum_j p_j q_j^T cos(q_j.m) exp(-q_j.C.q_j / 2)

(the junction covariance term (p q^T C + C q p^T) cos e is exactly the
junction part of A_eff C + C A_eff^T).  Moments are advanced with fixed-step
RK4; the raw SDE with Euler-Maruyama.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import StateSpaceSystem


class IntegrationAborted(RuntimeError):
    def __init__(self, message, trajectory=None, step=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.step = step


class StationarySolveError(RuntimeError):
    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = residual_history or []


@dataclass(frozen=True)
class GaussianState:
    """Mean vector and covariance matrix of the Gaussian closure."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m, C = np.asarray(self.mean, float), np.asarray(self.cov, float)
        if C.shape != (m.size, m.size):
            raise ValueError(f"cov shape {C.shape} does not match mean size {m.size}")
        scale = np.max(np.abs(C)) or 1.0
        if np.max(np.abs(C - C.T)) > 1e-12 * scale:
            raise ValueError("covariance not symmetric to 1e-12 relative")
        evals = np.linalg.eigvalsh(C)
        floor = -1e-10 * max(np.trace(C), 0.0) / max(len(m), 1) - 1e-300
        if evals.min() < floor:
            raise ValueError(f"covariance not PSD: min eigenvalue {evals.min():.3e} < {floor:.3e}")

    @property
    def dim(self) -> int:
        return self.mean.size


def raw_state(mean, cov) -> GaussianState:
    """GaussianState bypassing invariant validation (FD probes, internals)."""
    st = GaussianState.__new__(GaussianState)
    object.__setattr__(st, "mean", np.asarray(mean, float))
    object.__setattr__(st, "cov", np.asarray(cov, float))
    return st


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step integrator settings (internal time units, ns).

    ``dt`` must satisfy dt <= 1/(50 f_max) with f_max the largest
    eigenfrequency of A or channel rate (cycles); :func:`suggest_dt`
    computes the bound.
    """

    dt: float
    t_end: float
    method: str = "rk4"  # "rk4" (moments) or "euler-maruyama" (Langevin)
    symmetrize_every: int = 100
    record_stride: int = 100

    def __post_init__(self):
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.method not in ("rk4", "euler-maruyama"):
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class Trajectory:
    """Recorded integration output (decimated by ``record_stride``)."""

    times: np.ndarray
    means: np.ndarray  # (n_rec, d) means, or one realization's samples
    covariances: list | None = None  # optional sparse full-C snapshots (t, C)
    var_tracks: np.ndarray | None = None  # (n_rec, n_tracked) diag(C) entries
    var_indices: tuple[int, ...] = ()
    derived: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times)
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if len(self.means) != len(t):
            raise ValueError("means length inconsistent with times")


def max_eigenfrequency(system: StateSpaceSystem) -> float:
    """Largest |eigenvalue| of A or channel rate, in cycles per ns."""
    lam = np.linalg.eigvals(system.A)
    f = np.max(np.abs(lam)) / (2.0 * math.pi) if lam.size else 0.0
    return float(f)


def suggest_dt(system: StateSpaceSystem, oversample: float = 50.0) -> float:
    return 1.0 / (oversample * max_eigenfrequency(system))


# ----------------------------------------------------------------- moment rhs


def _gauss_factors(system: StateSpaceSystem, mean, cov):
    """Per-junction (sin, cos, damping) at the current state."""
    out = []
    for p, q, _ in system.junctions:
        theta = float(q @ mean)
        gamma = float(q @ cov @ q)
        out.append((math.sin(theta), math.cos(theta), math.exp(-0.5 * gamma)))
    return out


def effective_drift_matrix(system: StateSpaceSystem, mean, cov) -> np.ndarray:
    """A_eff = A + sum p q^T cos(q.m) exp(-q.C.q/2)."""
    A_eff = system.A.copy()
    for (p, q, _), (_s, c, e) in zip(system.junctions, _gauss_factors(system, mean, cov)):
        A_eff += np.outer(p, q) * (c * e)
    return A_eff


def rhs_mean(system: StateSpaceSystem, state: GaussianState) -> np.ndarray:
    """d<x>/dt of the Gaussian closure."""
    out = system.A @ state.mean - system.x_ext
    for (p, q, _), (s, _c, e) in zip(system.junctions, _gauss_factors(system, state.mean, state.cov)):
        out += p * (s * e)
    return out


def rhs_cov(system: StateSpaceSystem, state: GaussianState) -> np.ndarray:
    """dC/dt of the Gaussian closure (symmetric by construction)."""
    A_eff = effective_drift_matrix(system, state.mean, state.cov)
    AC = A_eff @ state.cov
    return AC + AC.T + system.B @ system.B.T


# ------------------------------------------------------------ moment stepping


def _moment_rhs_raw(system, BBT, mean, cov):
    A = system.A
    dm = A @ mean - system.x_ext
    AC = A @ cov
    for p, q, _ in system.junctions:
        theta = float(q @ mean)
        gamma = float(q @ cov @ q)
        e = math.exp(-0.5 * gamma)
        dm += p * (math.sin(theta) * e)
        AC += np.outer(p * (math.cos(theta) * e), q @ cov)
    dC = AC + AC.T + BBT
    return dm, dC


def integrate_moments(
    system: StateSpaceSystem,
    initial: GaussianState,
    config: IntegratorConfig,
    var_indices: tuple[int, ...] = (),
    cov_snapshot_every: int = 0,
    check_every: int = 200,
    psd_abort_tol: float = 1e-6,
) -> Trajectory:
    """Fixed-step RK4 on the stacked (mean, covariance) system.

    The covariance is re-symmetrized every ``symmetrize_every`` steps and
    checked (finiteness, positive semidefiniteness) every ``check_every``;
    violations abort with the last finite recorded state attached to the
    raised :class:`IntegrationAborted`.
    """
    m = initial.mean.astype(float).copy()
    C = initial.cov.astype(float).copy()
    BBT = system.B @ system.B.T
    dt = config.dt
    n = config.n_steps
    rec = config.record_stride

    times = [0.0]
    means = [m.copy()]
    tracks = [C[list(var_indices), list(var_indices)].copy()] if var_indices else None
    snaps = [(0.0, C.copy())] if cov_snapshot_every else None

    def build(upto_steps):
        return Trajectory(
            times=np.array(times),
            means=np.array(means),
            covariances=snaps,
            var_tracks=np.array(tracks) if tracks is not None else None,
            var_indices=tuple(var_indices),
        )

    n_rec = 0
    for step in range(1, n + 1):
        dm1, dC1 = _moment_rhs_raw(system, BBT, m, C)
        dm2, dC2 = _moment_rhs_raw(system, BBT, m + 0.5 * dt * dm1, C + 0.5 * dt * dC1)
        dm3, dC3 = _moment_rhs_raw(system, BBT, m + 0.5 * dt * dm2, C + 0.5 * dt * dC2)
        dm4, dC4 = _moment_rhs_raw(system, BBT, m + dt * dm3, C + dt * dC3)
        m = m + (dt / 6.0) * (dm1 + 2.0 * dm2 + 2.0 * dm3 + dm4)
        C = C + (dt / 6.0) * (dC1 + 2.0 * dC2 + 2.0 * dC3 + dC4)

        if config.symmetrize_every and step % config.symmetrize_every == 0:
            C = 0.5 * (C + C.T)
        if check_every and step % check_every == 0:
            if not (np.all(np.isfinite(m)) and np.all(np.isfinite(C))):
                raise IntegrationAborted(f"non-finite state at step {step}", build(step), step)
            evals_min = scipy.linalg.eigvalsh(C, subset_by_index=(0, 0), check_finite=False)[0]
            if evals_min < -psd_abort_tol * max(np.trace(C), 1e-300) / len(m):
                raise IntegrationAborted(
                    f"covariance lost positive semidefiniteness at step {step} "
                    f"(min eigenvalue {evals_min:.3e})",
                    build(step),
                    step,
                )
        if step % rec == 0 or step == n:
            times.append(step * dt)
            means.append(m.copy())
            if tracks is not None:
                tracks.append(C[list(var_indices), list(var_indices)].copy())
            n_rec += 1
            if snaps is not None and cov_snapshot_every and n_rec % cov_snapshot_every == 0:
                snaps.append((step * dt, 0.5 * (C + C.T)))

    traj = build(n)
    traj.derived["final_cov"] = 0.5 * (C + C.T)
    return traj


# ----------------------------------------------------------------- Langevin


def langevin_step_operators(system: StateSpaceSystem, dt: float):
    """Exact linear-step operators for the exponential Euler-Maruyama scheme.

    Returns (Phi, Phi_half, L) with Phi = exp(A dt), Phi_half = exp(A dt/2)
    and L a factor of the exact step-noise covariance
    Q_dt = int_0^dt exp(A s) B B^T exp(A^T s) ds  (van Loan block-matrix
    formula), so the linear part of the SDE is integrated exactly at any
    step size.  Superconducting circuits carry GHz modes with damping many
    orders below their frequency; a plain explicit stochastic Euler step is
    unconditionally unstable on such oscillators, while this scheme's
    stability is governed only by the bounded junction nonlinearity.
    """
    A, B = system.A, system.B
    d = A.shape[0]
    Phi = scipy.linalg.expm(A * dt)
    Phi_half = scipy.linalg.expm(A * (0.5 * dt))
    block = np.zeros((2 * d, 2 * d))
    block[:d, :d] = A * dt
    block[:d, d:] = (B @ B.T) * dt
    block[d:, d:] = -A.T * dt
    E = scipy.linalg.expm(block)
    Q = E[:d, d:] @ Phi.T
    Q = 0.5 * (Q + Q.T)
    evals, vecs = np.linalg.eigh(Q)
    evals = np.clip(evals, 0.0, None)
    L = vecs * np.sqrt(evals)
    return Phi, Phi_half, L


def integrate_langevin(
    system: StateSpaceSystem,
    initial: np.ndarray,
    config: IntegratorConfig,
    seed: int,
    n_realizations: int = 1,
    drive: tuple[np.ndarray, callable] | None = None,
    record_indices: tuple[int, ...] | None = None,
    antialias: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Exponential Euler-Maruyama ensemble integration of the nonlinear SDE.

    The linear drift and the noise are propagated exactly per step
    (:func:`langevin_step_operators`); the junction sine drift and any
    coherent drive enter as a midpoint-propagated impulse, giving weak
    first-order convergence in the nonlinearity only.

    Parameters
    ----------
    initial : (d,) start state shared by all realizations.
    drive : optional (vector, envelope) pair; ``vector * envelope(t)`` is
        added to the drift (used for coherent port kicks).
    record_indices : state components to record (default: all).
    antialias : average each recorded component over the record stride
        (boxcar low-pass) instead of point sampling.

    Returns
    -------
    times : (n_rec,) and samples : (n_realizations, n_rec, n_recorded).
    Identical seeds and configs give bit-identical output.
    """
    rng = np.random.default_rng(seed)
    d = system.dim
    R = n_realizations
    X = np.tile(np.asarray(initial, float).reshape(d, 1), (1, R))
    dt = config.dt
    n = config.n_steps
    rec_idx = np.arange(d) if record_indices is None else np.asarray(record_indices, int)
    stride = config.record_stride

    n_rec = n // stride + 1
    times = np.empty(n_rec + 1)
    out = np.empty((R, n_rec + 1, len(rec_idx)))
    times[0] = 0.0
    out[:, 0, :] = X[rec_idx, :].T
    acc = np.zeros((len(rec_idx), R))

    Phi, Phi_half, L = langevin_step_operators(system, dt)
    x_ext = system.x_ext
    n_noise = L.shape[1]
    pj = np.stack([p for p, _, _ in system.junctions]) if system.junctions else np.zeros((0, d))
    qj = np.stack([q for _, q, _ in system.junctions]) if system.junctions else np.zeros((0, d))
    pj_prop = (Phi_half @ pj.T) if len(pj) else None  # midpoint-propagated impulses
    ext_prop = Phi_half @ x_ext
    dvec, env = (None, None) if drive is None else drive
    dvec_prop = Phi_half @ dvec if dvec is not None else None

    k = 0
    for step in range(1, n + 1):
        G = -ext_prop[:, None]
        if pj_prop is not None:
            G = G + pj_prop @ np.sin(qj @ X)
        if dvec_prop is not None:
            G = G + np.outer(dvec_prop, np.full(R, env((step - 0.5) * dt)))
        xi = rng.standard_normal((n_noise, R))
        X = Phi @ X + dt * G + L @ xi
        if antialias:
            acc += X[rec_idx, :]
        if step % stride == 0:
            k += 1
            times[k] = step * dt
            out[:, k, :] = (acc / stride).T if antialias else X[rec_idx, :].T
            acc[:] = 0.0
        if step % 5000 == 0 and not np.all(np.isfinite(X)):
            raise IntegrationAborted(f"non-finite Langevin state at step {step}", None, step)

    return times[: k + 1], out[:, : k + 1, :]


# ----------------------------------------------------------------- stationary


def stationary_covariance(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve A X + X A^T + Q = 0 for Hurwitz A, robust to high-Q modes.

    Superconducting circuits carry modes whose decay rates are many orders
    below their frequencies; Schur-based solvers lose them (separation
    ~ 2 min|Re lambda| against matrix norms of 1e6+).  In the eigenbasis
    the solution is X = V Y V^H with Y_ij = -(W Q W^H)_ij / (l_i + l_j*),
    W = V^-1: every division carries an explicit, accurately computed decay
    rate, which is exactly how the physical variance of a weakly damped
    mode stays finite and well determined.
    """
    lam, V = scipy.linalg.eig(A)
    if np.max(lam.real) >= 0.0:
        raise np.linalg.LinAlgError("drift matrix is not Hurwitz")
    W = np.linalg.inv(V)
    G = W @ Q @ W.conj().T
    denom = lam[:, None] + lam.conj()[None, :]
    Y = -G / denom
    X = (V @ Y @ V.conj().T).real
    return 0.5 * (X + X.T)


def find_stationary(
    system: StateSpaceSystem,
    guess: GaussianState | None = None,
    max_outer: int = 100,
    tol: float = 1e-10,
    damping: float = 0.5,
) -> GaussianState:
    """Self-consistent stationary state of the moment equations.

    Alternates Newton iteration on the mean equation (covariance frozen)
    with a Lyapunov solve A_eff C + C A_eff^T + B B^T = 0, with a damped
    covariance update.  Raises :class:`StationarySolveError` when A_eff is
    not Hurwitz during the Lyapunov step ("no stable stationary covariance",
    expected inside the instability region) or on non-convergence.
    """
    d = system.dim
    m = np.zeros(d) if guess is None else guess.mean.astype(float).copy()
    C = np.zeros((d, d)) if guess is None else guess.cov.astype(float).copy()
    BBT = system.B @ system.B.T
    bb_scale = max(float(np.linalg.norm(BBT)), 1e-300)
    noisy = float(np.max(np.abs(BBT))) > 0.0
    history = []

    def mean_scale(mm):
        s = max(np.max(np.abs(system.A @ mm)), np.max(np.abs(system.x_ext)), 1e-300)
        for p, _, _ in system.junctions:
            s = max(s, np.max(np.abs(p)))
        return s

    for outer in range(max_outer):
        # Newton on the mean with C held fixed.
        for _ in range(60):
            g = system.A @ m - system.x_ext
            J = system.A.copy()
            for p, q, _ in system.junctions:
                theta = float(q @ m)
                e = math.exp(-0.5 * float(q @ C @ q))
                g += p * (math.sin(theta) * e)
                J += np.outer(p, q) * (math.cos(theta) * e)
            res = np.max(np.abs(g)) / mean_scale(m)
            if res < 0.1 * tol:
                break
            try:
                delta = np.linalg.solve(J, -g)
            except np.linalg.LinAlgError:
                # gauge zero modes (DC-floating node fluxes): minimum-norm step
                delta = np.linalg.lstsq(J, -g, rcond=None)[0]
            m = m + delta

        A_eff = effective_drift_matrix(system, m, C)
        if noisy:
            lam_max = float(np.max(np.linalg.eigvals(A_eff).real))
            if lam_max >= 0.0:
                raise StationarySolveError(
                    f"no stable stationary covariance: A_eff spectral abscissa {lam_max:.3e} >= 0",
                    history,
                )
            C_new = stationary_covariance(A_eff, BBT)
        else:
            C_new = np.zeros_like(C)
        C = 0.5 * ((C + damping * (C_new - C)) + (C + damping * (C_new - C)).T)

        g = system.A @ m - system.x_ext
        A_eff = system.A.copy()
        for p, q, _ in system.junctions:
            theta = float(q @ m)
            e = math.exp(-0.5 * float(q @ C @ q))
            g += p * (math.sin(theta) * e)
            A_eff += np.outer(p, q) * (math.cos(theta) * e)
        res_mean = float(np.max(np.abs(g)) / mean_scale(m))
        if noisy:
            AC = A_eff @ C
            lyap = AC + AC.T + BBT
            # normwise backward error (Higham): the achievable relative
            # accuracy for Lyapunov equations whose drift mixes stiff RF
            # couplings with slow DC-pinning modes
            res_cov = float(
                np.linalg.norm(lyap)
                / (2.0 * np.linalg.norm(A_eff) * np.linalg.norm(C) + bb_scale)
            )
        else:
            res_cov = 0.0
        history.append((res_mean, res_cov))
        if res_mean < tol and res_cov < tol:
            return GaussianState(m, C)

    raise StationarySolveError(
        f"stationary solve did not converge in {max_outer} outer iterations "
        f"(last residuals {history[-1]})",
        history,
    )
