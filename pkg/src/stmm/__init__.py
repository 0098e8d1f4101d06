"""Link-level simulator for full-duplex communication through a space-time modulated metasurface."""

from .capacity import SpectralEfficiency, optimal_mu, spectral_efficiency
from .config import Scenario, SweepSpec, parse_scenario, serialize_scenario
from .csi import CsiErrorModel, crlb_sigma_theta, csi_loss_factor, ook_baseline_se
from .errors import ConfigError, ContractViolation, DomainError, KnotSamplingError, UsageError
from .geometry import Architecture, IncidenceGeometry, StmmConfig, aperture_delay, meta_atom_delay
from .link import LinkConfig, Regime, classify_regime, cutoff_kappa, isi_power, snr_downlink, snr_uplink
from .modulation import CpmConfig, Psf, SymbolStream, gamma, occupied_bandwidth
from .reflection import (EVANESCENT, CouplingParams, array_factor_1d, array_factor_2d, array_factor_sq,
                         phase_law, squint_angle)

__all__ = [name for name in dir() if not name.startswith("_")]
