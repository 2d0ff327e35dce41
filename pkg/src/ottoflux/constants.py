"""Physical constants and the internal unit system.

All heavy numerics run in a consistent "circuit" unit system chosen so that
assembled matrices stay O(1)-O(1e5) instead of the 1e30 condition numbers
raw SI produces for fF/nH/GHz circuits:

    time         ns
    frequency    rad/ns
    current      uA
    resistance   Ohm
    inductance   nH
    capacitance  nF
    flux         fWb   (1 fWb = 1e-15 Wb = uA * nH)
    voltage      uV    (fWb / ns)
    energy       zJ    (1e-21 J = uV * uA * ns)
    temperature  K

The system is closed: every circuit law keeps its SI form.  Conversions
happen only at configuration boundaries (netlist files are SI, CSV output
is SI).
"""

from __future__ import annotations

from dataclasses import dataclass

# SI values, CODATA 2018 (exact where defined).
H_SI = 6.62607015e-34  # J s
HBAR_SI = 1.054571817e-34  # J s
KB_SI = 1.380649e-23  # J / K
E_CHARGE_SI = 1.602176634e-19  # C
PHI0_SI = H_SI / (2.0 * E_CHARGE_SI)  # Wb

# Scale factors: value[SI] = value[internal] * SCALE.
TIME_SCALE = 1e-9  # s per ns
CURRENT_SCALE = 1e-6  # A per uA
FLUX_SCALE = 1e-15  # Wb per fWb
VOLT_SCALE = FLUX_SCALE / TIME_SCALE  # 1e-6 V per uV
ENERGY_SCALE = VOLT_SCALE * CURRENT_SCALE * TIME_SCALE  # 1e-21 J per zJ
RES_SCALE = VOLT_SCALE / CURRENT_SCALE  # 1.0 Ohm
IND_SCALE = FLUX_SCALE / CURRENT_SCALE  # 1e-9 H per nH
CAP_SCALE = CURRENT_SCALE * TIME_SCALE / VOLT_SCALE  # 1e-9 F per nF
FREQ_SCALE = 1.0 / TIME_SCALE  # (rad/s) per (rad/ns)

# PSD of a current noise source: A^2/Hz = A^2 s -> uA^2 ns.
PSD_SCALE = CURRENT_SCALE**2 * TIME_SCALE  # 1e-21


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants expressed in a single stated unit system.

    Attributes
    ----------
    h, hbar : float
        Planck constant and reduced Planck constant (energy * time).
    kB : float
        Boltzmann constant (energy / K).
    Phi0 : float
        Superconducting flux quantum h / 2e (flux).
    """

    h: float
    hbar: float
    kB: float
    Phi0: float

    def __post_init__(self):
        if min(self.h, self.hbar, self.kB, self.Phi0) <= 0.0:
            raise ValueError("constants must be positive")
        # h / hbar = 2*pi holds in every unit system; Phi0 = h/2e is
        # checked against the SI instance in the test suite.
        if not abs(self.h / self.hbar / 6.283185307179586 - 1.0) < 1e-6:
            raise ValueError("h / hbar must equal 2*pi")

    @staticmethod
    def si() -> "PhysicalConstants":
        return PhysicalConstants(h=H_SI, hbar=HBAR_SI, kB=KB_SI, Phi0=PHI0_SI)

    @staticmethod
    def internal() -> "PhysicalConstants":
        """Constants in the internal (ns, uA, fWb, zJ, K) system."""
        return PhysicalConstants(
            h=H_SI / (ENERGY_SCALE * TIME_SCALE),
            hbar=HBAR_SI / (ENERGY_SCALE * TIME_SCALE),
            kB=KB_SI / ENERGY_SCALE,
            Phi0=PHI0_SI / FLUX_SCALE,
        )


SI = PhysicalConstants.si()
INTERNAL = PhysicalConstants.internal()
