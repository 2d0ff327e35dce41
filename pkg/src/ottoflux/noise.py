"""Finite stochastic-channel approximations of quantum Johnson-Nyquist noise.

A resistor R at temperature T drives its branch with a current noise of
two-sided power spectral density

    S(w) = (hbar w / R) coth(hbar w / (2 kB T))        [A^2/Hz]

which interpolates between 2 kB T / R at low frequency and the zero-point
line hbar |w| / R.  The simulator realizes it as one white source plus
Ornstein-Uhlenbeck channels,

    I(t) = c0 xi_0(t) + sum_n c_n d/dt eta_n,   d eta_n/dt = -nu_n eta_n + xi_n,

whose summed spectrum is  c0^2 + sum_n c_n^2 w^2 / (w^2 + nu_n^2).

Two constructions are provided: the analytic Matsubara expansion
(c0^2 = c_n^2/2 = 2 kB T / R, nu_n = 2 pi n kB T / hbar), which converges
slowly at low temperature, and a compressed fit using the AAA rational
approximation in the variable s = w^2 (evenness of S makes every pole a
real OU rate).  All quantities here are SI.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import aaa
from .constants import SI, PhysicalConstants


class RealizabilityError(RuntimeError):
    """Fit produced channels not realizable as real stochastic processes."""


@dataclass(frozen=True)
class PsdTarget:
    """Target two-sided current PSD of a resistor R at temperature T."""

    R: float  # Ohm
    T: float  # K
    constants: PhysicalConstants = field(default_factory=lambda: SI)

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("R must be positive")
        if self.T < 0:
            raise ValueError("negative temperature rejected")

    def __call__(self, omega) -> np.ndarray:
        return psd_target_eval(self, omega)


def psd_target_eval(target: PsdTarget, omega) -> np.ndarray:
    """Evaluate (hbar w / R) coth(hbar w / 2 kB T); analytic limits at w=0, T=0."""
    w = np.asarray(omega, dtype=float)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    hbar, kB = target.constants.hbar, target.constants.kB
    if target.T == 0.0:
        out = hbar * np.abs(w) / target.R
    else:
        x = hbar * w / (2.0 * kB * target.T)
        out = np.empty_like(w)
        small = np.abs(x) < 1e-4
        xs = x[small]
        # x coth x = 1 + x^2/3 - x^4/45 + ...
        out[small] = (2.0 * kB * target.T / target.R) * (1.0 + xs**2 / 3.0 - xs**4 / 45.0)
        xl = x[~small]
        out[~small] = (hbar * w[~small] / target.R) / np.tanh(xl)
    return out[0] if scalar else out


@dataclass(frozen=True)
class NoiseChannelSet:
    """White weight plus OU channels approximating one resistor's noise PSD.

    ``channels`` holds (c_sq [A^2/Hz], nu [1/s]) pairs.  The reconstruction
    c0_sq + sum c_sq w^2/(w^2 + nu^2) matches the target within
    ``max_rel_error`` on [0, band_limit].
    """

    c0_sq: float
    channels: tuple[tuple[float, float], ...]
    band_limit: float
    max_rel_error: float
    method: str = "matsubara"

    def __post_init__(self):
        if self.c0_sq < 0.0:
            raise RealizabilityError(f"c0_sq = {self.c0_sq} < 0")
        for c_sq, nu in self.channels:
            if c_sq < 0.0 or nu <= 0.0:
                raise RealizabilityError(f"channel (c_sq={c_sq}, nu={nu}) not realizable")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def reconstruction(self, omega) -> np.ndarray:
        w2 = np.atleast_1d(np.asarray(omega, dtype=float)) ** 2
        out = np.full(w2.shape, self.c0_sq)
        for c_sq, nu in self.channels:
            out += c_sq * w2 / (w2 + nu**2)
        return out if np.ndim(omega) else out[0]

    # ------------------------------------------------------------------ JSON
    def to_dict(self) -> dict:
        return {
            "c0_sq": self.c0_sq,
            "channels": [{"c_sq": c, "nu": nu} for c, nu in self.channels],
            "band_limit": self.band_limit,
            "max_rel_error": self.max_rel_error,
            "method": self.method,
        }

    @staticmethod
    def from_dict(doc: dict) -> "NoiseChannelSet":
        return NoiseChannelSet(
            c0_sq=float(doc["c0_sq"]),
            channels=tuple((float(ch["c_sq"]), float(ch["nu"])) for ch in doc["channels"]),
            band_limit=float(doc["band_limit"]),
            max_rel_error=float(doc["max_rel_error"]),
            method=str(doc.get("method", "matsubara")),
        )

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @staticmethod
    def load(path: str | Path) -> "NoiseChannelSet":
        return NoiseChannelSet.from_dict(json.loads(Path(path).read_text()))


def _certify(target: PsdTarget, cs: "NoiseChannelSet", band_limit: float, n: int = 1000) -> float:
    """Max pointwise relative PSD error on log-spaced frequencies plus w=0."""
    grid = np.concatenate(([0.0], np.geomspace(band_limit * 1e-6, band_limit, n)))
    truth = psd_target_eval(target, grid)
    rec = cs.reconstruction(grid)
    if target.T > 0:
        rel = np.abs(rec - truth) / truth
    else:
        rel = np.abs(rec - truth) / max(truth.max(), 1e-300)
    return float(np.max(rel))


def matsubara_channels(target: PsdTarget, n_channels: int, band_limit: float = 2 * math.pi * 20e9) -> NoiseChannelSet:
    """Truncated Matsubara expansion of the target PSD.

    c0^2 = 2 kB T / R, every channel c_n^2 = 4 kB T / R with rate
    nu_n = 2 pi n kB T / hbar.  T = 0 is rejected (the rate spacing
    collapses); use :func:`aaa_channels` there.
    """
    if target.T <= 0.0:
        raise ValueError("Matsubara construction requires T > 0 (use the AAA path at T = 0)")
    if n_channels < 0:
        raise ValueError("n_channels must be >= 0")
    kB, hbar = target.constants.kB, target.constants.hbar
    c0_sq = 2.0 * kB * target.T / target.R
    c_sq = 4.0 * kB * target.T / target.R
    nu1 = 2.0 * math.pi * kB * target.T / hbar
    channels = tuple((c_sq, n * nu1) for n in range(1, n_channels + 1))
    cs = NoiseChannelSet(c0_sq, channels, band_limit, np.nan, "matsubara")
    err = _certify(target, cs, band_limit)
    return NoiseChannelSet(c0_sq, channels, band_limit, err, "matsubara")


def matsubara_count_for(target: PsdTarget, band_limit: float, tol: float, n_max: int = 100000) -> int:
    """Smallest channel count whose certified error is below tol (brute scan).

    The truncation error is monotone in n, so a doubling search followed by
    bisection is an exact scan oracle.
    """
    def err(n):
        return matsubara_channels(target, n, band_limit).max_rel_error

    lo, hi = 0, 1
    while err(hi) >= tol:
        lo, hi = hi, hi * 2
        if hi > n_max:
            raise RuntimeError(f"no Matsubara count below {n_max} reaches tol {tol}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if err(mid) < tol:
            hi = mid
        else:
            lo = mid
    return hi


def aaa_channels(
    target: PsdTarget,
    omega_max: float,
    tol: float = 1e-3,
    n_samples: int = 400,
    max_degree: int = 40,
    fallback: bool = True,
) -> NoiseChannelSet:
    """Compressed channel set from an AAA fit of G(s) = S(sqrt(s)), s = w^2.

    Fitting in s exploits the evenness of the PSD: every real negative pole
    -nu^2 maps to one OU channel with rate nu and weight c_sq = r/nu^2 from
    the constant-minus-poles form G(s) = g_inf - sum r_m/(s + nu_m^2).
    Complex or positive poles, or negative weights, are a realizability
    failure; with ``fallback`` the Matsubara construction (grown to the same
    certified error) is returned instead and flagged in ``method``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    s_lo = (2.0 * math.pi * 1e6) ** 2
    s = np.concatenate(([0.0], np.geomspace(s_lo, omega_max**2, n_samples)))
    g = psd_target_eval(target, np.sqrt(s))

    # Pole-free candidate first: in the near-classical regime the optimal
    # constant (degree-0 rational) already meets tol, and no OU channel can
    # beat zero channels.
    c0_flat = 0.5 * (float(g.max()) + float(g.min()))
    flat = NoiseChannelSet(c0_flat, (), omega_max, np.nan, "aaa")
    err_flat = _certify(target, flat, omega_max)
    if err_flat < tol:
        return NoiseChannelSet(c0_flat, (), omega_max, err_flat, "aaa")

    fit = aaa.aaa_fit(s, g, tol=tol * 0.2, max_degree=max_degree)

    try:
        poles, residues, ginf, _pruned = aaa.poles_residues(fit)
        if np.any(np.abs(poles.imag) > 1e-9 * np.abs(poles.real)):
            raise RealizabilityError("complex poles in s")
        p = poles.real
        if np.any(p >= 0.0):
            raise RealizabilityError("nonnegative pole in s")
        nu = np.sqrt(-p)
        c_sq = -residues.real / nu**2
        if np.any(c_sq < 0.0):
            raise RealizabilityError("negative channel weight")
        c0_sq = ginf - float(np.sum(c_sq))
        if c0_sq < 0.0:
            raise RealizabilityError("negative white weight")
        order = np.argsort(nu)
        channels = tuple((float(c_sq[i]), float(nu[i])) for i in order)
        cs = NoiseChannelSet(c0_sq, channels, omega_max, np.nan, "aaa")
        err = _certify(target, cs, omega_max)
        cs = NoiseChannelSet(c0_sq, channels, omega_max, err, "aaa")
        if err >= tol:
            raise RealizabilityError(f"certified error {err:.3g} above tol {tol:.3g}")
        return cs
    except RealizabilityError:
        if not fallback:
            raise
        n = matsubara_count_for(target, omega_max, tol)
        ms = matsubara_channels(target, n, omega_max)
        return NoiseChannelSet(ms.c0_sq, ms.channels, ms.band_limit, ms.max_rel_error, "matsubara-fallback")
