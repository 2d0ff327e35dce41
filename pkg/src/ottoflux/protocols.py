"""Measurement-protocol emulation: ringdown, emission spectra, power traces.

These run the raw Langevin dynamics (or the moment system, for power
traces) and post-process the feedline-port voltage the way the bench
instruments would: digital IQ demodulation over rectangular integration
windows, Welch-averaged periodograms, cycle-averaged output power.

Config values at this interface are SI (seconds, Hz, watts, amperes);
conversion to internal units happens here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from . import constants as K
from .assembly import StateSpaceSystem
from .dynamics import GaussianState, IntegratorConfig, Trajectory, integrate_moments


# ----------------------------------------------------------------- ringdown


@dataclass(frozen=True)
class RingdownConfig:
    port: str  # driven and sensed port label
    f_drive: float  # Hz, kick carrier
    kick_amplitude: float  # A, Norton current amplitude of the kick
    t_kick: float  # s
    idle_times: tuple[float, ...]  # s, must be sorted ascending
    t_integrate: float  # s, IQ window length
    f_demod: float | None = None  # Hz, defaults to f_drive
    n_realizations: int = 32
    seed: int = 1
    dt: float | None = None  # s, defaults to suggest_dt


@dataclass
class RingdownResult:
    idle_times: np.ndarray  # s
    amplitude: np.ndarray  # ensemble-mean |<IQ>| per idle time (uV)
    iq_shots: np.ndarray  # (n_realizations, n_idle) complex single-shot IQ
    noise_floor: float


def run_ringdown(system: StateSpaceSystem, config: RingdownConfig, dt_int: float) -> RingdownResult:
    """Langevin ensemble with a coherent kick, demodulated per idle time.

    One trajectory per realization covers kick plus all idle windows; the
    IQ integral of each (disjoint) window is accumulated on the fly at full
    time resolution.  ``dt_int`` is the step in internal units (ns).
    """
    f_demod = config.f_demod if config.f_demod is not None else config.f_drive
    w_drive = 2.0 * math.pi * config.f_drive * K.TIME_SCALE  # rad/ns
    w_demod = 2.0 * math.pi * f_demod * K.TIME_SCALE
    t_kick = config.t_kick / K.TIME_SCALE
    t_int = config.t_integrate / K.TIME_SCALE
    idles = np.asarray(config.idle_times, float) / K.TIME_SCALE
    if np.any(np.diff(idles) <= 0):
        raise ValueError("idle_times must be strictly increasing")
    windows = [(t_kick + ti, t_kick + ti + t_int) for ti in idles]
    for (a0, a1), (b0, _) in zip(windows, windows[1:]):
        if b0 < a1:
            raise ValueError("IQ windows overlap; space idle_times by at least t_integrate")
    t_end = windows[-1][1]

    drive_vec = system.drive_vectors[config.port] * (config.kick_amplitude / K.CURRENT_SCALE)
    sense = system.vel_index(_port_node_label(system, config.port))

    from .dynamics import langevin_step_operators

    rng = np.random.default_rng(config.seed)
    d = system.dim
    R = config.n_realizations
    X = np.zeros((d, R))
    pj = np.stack([p for p, _, _ in system.junctions]) if system.junctions else np.zeros((0, d))
    qj = np.stack([q for _, q, _ in system.junctions]) if system.junctions else np.zeros((0, d))
    n = int(math.ceil(t_end / dt_int))
    Phi, Phi_half, L = langevin_step_operators(system, dt_int)
    n_noise = L.shape[1]
    pj_prop = (Phi_half @ pj.T) if len(pj) else None
    ext_prop = Phi_half @ system.x_ext
    drive_prop = Phi_half @ drive_vec

    iq = np.zeros((R, len(windows)), dtype=complex)
    win_of_step = np.full(n + 1, -1, dtype=int)
    for w_i, (t0, t1) in enumerate(windows):
        win_of_step[int(t0 / dt_int) : int(t1 / dt_int)] = w_i

    for step in range(1, n + 1):
        t = step * dt_int
        G = -ext_prop[:, None]
        if pj_prop is not None:
            G = G + pj_prop @ np.sin(qj @ X)
        if t <= t_kick:
            G = G + drive_prop[:, None] * math.cos(w_drive * (t - 0.5 * dt_int))
        xi = rng.standard_normal((n_noise, R))
        X = Phi @ X + dt_int * G + L @ xi
        w_i = win_of_step[step]
        if w_i >= 0:
            iq[:, w_i] += X[sense, :] * np.exp(-1j * w_demod * t) * dt_int

    iq /= t_int
    mean_iq = iq.mean(axis=0)
    amp = np.abs(mean_iq)
    floor = float(np.median(np.abs(iq - mean_iq[None, :]))) / math.sqrt(R)
    return RingdownResult(np.asarray(config.idle_times, float), amp, iq, floor)


def _port_node_label(system: StateSpaceSystem, port_label: str) -> str:
    port = next(p for p in system.netlist.ports() if p.label == port_label)
    return next(nd.label for nd in system.netlist.nodes if nd.id == port.node)


# ------------------------------------------------------------------ emission


@dataclass(frozen=True)
class EmissionConfig:
    port: str
    t_end: float  # s
    rbw: float = 5e3  # Hz resolution bandwidth (Welch segment length = 1/rbw)
    f_center: float | None = None  # Hz, spectrum window center (default: all)
    f_span: float | None = None
    seed: int = 2
    sample_rate: float = 2e9  # Hz for the decimated record
    dt: float | None = None


def run_emission(system: StateSpaceSystem, config: EmissionConfig, dt_int: float, initial=None):
    """Welch periodogram of the port voltage from one long Langevin run.

    Returns (freq_hz, psd_w_per_hz): one-sided PSD of the power delivered
    to the port load, V^2 / Z0, in W/Hz.
    """
    from .dynamics import integrate_langevin

    stride = max(1, int(round(1.0 / (config.sample_rate * K.TIME_SCALE) / dt_int)))
    cfg = IntegratorConfig(
        dt=dt_int,
        t_end=config.t_end / K.TIME_SCALE,
        method="euler-maruyama",
        record_stride=stride,
    )
    sense = system.vel_index(_port_node_label(system, config.port))
    x0 = np.zeros(system.dim) if initial is None else initial
    times, samples = integrate_langevin(
        system, x0, cfg, seed=config.seed, n_realizations=1, record_indices=(sense,)
    )
    v = samples[0, :, 0]  # uV
    fs_hz = 1.0 / ((times[1] - times[0]) * K.TIME_SCALE)
    nperseg = min(len(v), max(64, int(fs_hz / config.rbw)))
    f, pxx = scipy.signal.welch(
        v, fs=fs_hz, window="hann", nperseg=nperseg, noverlap=nperseg // 2, detrend="constant"
    )
    port = next(p for p in system.netlist.ports() if p.label == config.port)
    psd_w = pxx * (K.VOLT_SCALE**2) / port.Z0  # V^2/Hz -> W/Hz into Z0
    if config.f_center is not None and config.f_span is not None:
        keep = np.abs(f - config.f_center) <= 0.5 * config.f_span
        f, psd_w = f[keep], psd_w[keep]
    return f, psd_w


# ---------------------------------------------------------------- power trace


@dataclass
class PowerTrace:
    times: np.ndarray  # s
    power: np.ndarray  # W, baseline-subtracted cycle-averaged output power
    saturation_mean: float
    saturation_std: float
    trajectory: Trajectory | None = None


def output_power_trace(
    system: StateSpaceSystem,
    trajectory: Trajectory,
    port: str,
    baseline: GaussianState,
    cycle_period_s: float,
) -> PowerTrace:
    """Cycle-averaged port output power along a moment trajectory.

    P(t) = [<V_p>^2 + Var(V_p)] / Z0, boxcar-averaged over one driving
    period, minus the same quantity at the stationary baseline.  V_p is the
    port-node voltage; the port variance must have been tracked during
    integration (``var_indices``).
    """
    sense = system.vel_index(_port_node_label(system, port))
    if sense not in trajectory.var_indices:
        raise ValueError("trajectory did not track the port-velocity variance")
    k = trajectory.var_indices.index(sense)
    port_el = next(p for p in system.netlist.ports() if p.label == port)
    v_mean = trajectory.means[:, sense]
    v_var = trajectory.var_tracks[:, k]
    p_raw = (v_mean**2 + v_var) / (port_el.Z0 / K.RES_SCALE)  # internal: uV*uA = pW

    base = (baseline.mean[sense] ** 2 + baseline.cov[sense, sense]) / (port_el.Z0 / K.RES_SCALE)
    t_int = trajectory.times
    dt_rec = t_int[1] - t_int[0] if len(t_int) > 1 else 1.0
    win = max(1, int(round((cycle_period_s / K.TIME_SCALE) / dt_rec)))
    kernel = np.ones(win) / win
    p_avg = np.convolve(p_raw, kernel, mode="same")
    p_out = (p_avg - base) * 1e-12  # pW -> W

    n_tail = max(1, int(0.2 * len(p_out)))
    return PowerTrace(
        times=t_int * K.TIME_SCALE,
        power=p_out,
        saturation_mean=float(np.mean(p_out[-n_tail:])),
        saturation_std=float(np.std(p_out[-n_tail:])),
        trajectory=trajectory,
    )


def fit_growth_rate(times_s: np.ndarray, power_w: np.ndarray, lo_frac: float = 5.0, hi_frac: float = 0.3):
    """Exponential growth rate of the power trace (1/s) from a log-linear fit.

    The fit window spans from ``lo_frac`` times the initial power magnitude
    up to ``hi_frac`` of the plateau, catching the clean exponential phase.
    """
    p = np.asarray(power_w, float)
    tail = np.mean(p[-max(1, len(p) // 5) :])
    p0 = np.median(np.abs(p[: max(3, len(p) // 50)]))
    lo, hi = lo_frac * max(p0, 1e-300), hi_frac * tail
    if hi <= lo:
        raise ValueError("no clean growth window between noise floor and plateau")
    mask = (p > lo) & (p < hi)
    # keep the first contiguous run
    idx = np.nonzero(mask)[0]
    if len(idx) < 5:
        raise ValueError("growth window too short to fit")
    run_end = np.argmax(np.diff(idx) > 1) if np.any(np.diff(idx) > 1) else len(idx) - 1
    sel = idx[: run_end + 1]
    coef = np.polyfit(times_s[sel], np.log(p[sel]), 1)
    return float(coef[0])
