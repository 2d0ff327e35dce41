"""Quasiclassical Langevin simulator for superconducting-circuit thermal machines."""

__version__ = "0.1.0"

from .constants import INTERNAL, SI, PhysicalConstants
from .netlist import (
    Capacitor,
    CpwSegment,
    Inductor,
    JosephsonJunction,
    Netlist,
    Node,
    Port,
    Resistor,
    load_netlist,
)
from .assembly import (
    AssemblyError,
    ConfigurationError,
    LocalState,
    StateIndexMap,
    StateSpaceSystem,
    build_state_space,
    element_current,
    kirchhoff_residual,
    validate_netlist,
)
from .noise import NoiseChannelSet, PsdTarget, RealizabilityError, aaa_channels, matsubara_channels, psd_target_eval
from .aaa import BarycentricRational, aaa_fit, poles_residues
from .dynamics import (
    GaussianState,
    IntegratorConfig,
    IntegrationAborted,
    StationarySolveError,
    Trajectory,
    find_stationary,
    integrate_langevin,
    integrate_moments,
    rhs_cov,
    rhs_mean,
    suggest_dt,
)
from .response import (
    LinearizedSystem,
    StabilityMap,
    TransmissionMap,
    linearize,
    s_parameters,
    stability_map,
    transmission_sweep,
    two_port_impedance,
)
from .analysis import ResonanceFit, fit_resonance, noise_temperature
