"""Small measurement-analysis utilities: noise temperature, notch fits, dBm.

All SI units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .constants import SI


class FitError(RuntimeError):
    pass


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0:
        raise ValueError("power must be positive")
    return 10.0 * math.log10(p_watt) + 30.0


def noise_temperature(p_noise: float, f: float, bandwidth: float, constants=SI) -> float:
    """Effective temperature of band-limited noise power, from Planck's law.

    T = h f / (kB ln(h f B / P + 1)) for noise power P [W] in bandwidth
    B [Hz] centered at f [Hz].  Reduces to P/(kB B) in the Rayleigh-Jeans
    regime h f B << P.
    """
    if p_noise <= 0 or f <= 0 or bandwidth <= 0:
        raise ValueError("noise_temperature arguments must be positive")
    hf = constants.h * f
    return hf / (constants.kB * math.log1p(hf * bandwidth / p_noise))


@dataclass(frozen=True)
class ResonanceFit:
    """Side-coupled notch fit result; 1/Q_total = 1/Q_int + 1/Q_ext."""

    f0: float
    Q_total: float
    Q_int: float
    Q_ext: float
    depth: float
    residual: float

    def __post_init__(self):
        if min(self.f0, self.Q_total, self.Q_int, self.Q_ext) <= 0:
            raise FitError("fit produced non-positive parameters")
        lhs = 1.0 / self.Q_total
        rhs = 1.0 / self.Q_int + 1.0 / self.Q_ext
        if abs(lhs - rhs) > 1e-6 * lhs:
            raise FitError("Q decomposition inconsistent")


def notch_model(f: np.ndarray, f0: float, q_total: float, q_ext: float) -> np.ndarray:
    """S21 of a side-coupled (hanger) resonator:
    1 - (Q_t/Q_e) / (1 + 2 i Q_t (f - f0) / f0)."""
    return 1.0 - (q_total / q_ext) / (1.0 + 2j * q_total * (f - f0) / f0)


def fit_resonance(freq: np.ndarray, s21: np.ndarray, min_depth: float = 1e-4) -> ResonanceFit:
    """Least-squares notch fit of a complex S21 trace.

    Rejects traces without a resonance (dip depth below ``min_depth``) and
    requires some baseline on both sides of the dip.
    """
    freq = np.asarray(freq, float)
    s21 = np.asarray(s21, complex)
    if freq.ndim != 1 or freq.shape != s21.shape or len(freq) < 8:
        raise ValueError("need matching 1-D freq/s21 arrays with >= 8 points")
    mag = np.abs(s21)
    depth = float(1.0 - mag.min())
    if depth < min_depth:
        raise FitError(f"no resonance: dip depth {depth:.2e} below {min_depth:.0e}")
    i0 = int(np.argmin(mag))
    f0_guess = freq[i0]
    # linewidth guess from half-depth crossings
    half = 1.0 - 0.5 * depth
    above = mag > half
    lo = i0
    while lo > 0 and not above[lo]:
        lo -= 1
    hi = i0
    while hi < len(freq) - 1 and not above[hi]:
        hi += 1
    fwhm = max(freq[hi] - freq[lo], (freq[1] - freq[0]) * 2)
    qt_guess = f0_guess / fwhm
    qe_guess = qt_guess / max(depth, 1e-3)

    def residuals(x):
        f0, lq_t, lq_e = x
        model = notch_model(freq, f0, math.exp(lq_t), math.exp(lq_e))
        r = model - s21
        return np.concatenate([r.real, r.imag])

    x0 = np.array([f0_guess, math.log(qt_guess), math.log(qe_guess)])
    sol = scipy.optimize.least_squares(residuals, x0, method="lm", max_nfev=20000)
    if not sol.success:
        raise FitError(f"notch fit did not converge: {sol.message}")
    f0, q_total, q_ext = sol.x[0], math.exp(sol.x[1]), math.exp(sol.x[2])
    resid = float(np.sqrt(np.mean(sol.fun**2)))
    q_int = 1.0 / (1.0 / q_total - 1.0 / q_ext) if q_ext > q_total else math.inf
    if not math.isfinite(q_int) or q_int <= 0:
        # fully external-coupling-limited trace: report a large Q_int
        q_int = 1e12
        q_total = 1.0 / (1.0 / q_int + 1.0 / q_ext)
    return ResonanceFit(
        f0=float(f0),
        Q_total=float(1.0 / (1.0 / q_int + 1.0 / q_ext)),
        Q_int=float(q_int),
        Q_ext=float(q_ext),
        depth=depth,
        residual=resid,
    )
