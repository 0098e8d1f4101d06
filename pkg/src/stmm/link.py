"""Path loss, SNR budgets and the three-regime matched-filter analysis."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError, ContractViolation
from .geometry import (SPEED_OF_LIGHT, Architecture, IncidenceGeometry, StmmConfig,
                       aperture_delay, delay_grid)
from .modulation import CpmConfig, kappa_of, occupied_bandwidth
from .montecarlo import Estimate
from .reflection import CouplingParams, array_factor_sq

NARROWBAND_RATIO = 1 / 50


@dataclass(frozen=True)
class LinkConfig:
    """Power budget of the full-duplex link.

    Noise figures are powers in watts over the total band, which is how the
    SNR expressions use them; the uplink noise PSD at the matched filter is
    ``noise_power_master / B_tot``.
    """

    n_master: int = 512
    m_d_slave: int = 32
    tx_signal_power: float = 1.0
    noise_power_master: float = 1.0
    noise_power_slave: Optional[float] = None
    mu_split: float = 0.5
    total_bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.n_master < 1 or self.m_d_slave < 1:
            raise ConfigError("array sizes must be >= 1")
        if self.tx_signal_power < 0 or self.noise_power_master <= 0:
            raise ConfigError("signal power must be >= 0 and noise power > 0")
        if self.noise_power_slave is None:
            object.__setattr__(self, "noise_power_slave", self.noise_power_master)
        elif self.noise_power_slave <= 0:
            raise ConfigError("noise power must be > 0")
        if not 0 < self.mu_split < 1:
            raise ConfigError("mu_split must lie in (0, 1)")
        if self.total_bandwidth is not None and not self.total_bandwidth > 0:
            raise ConfigError("total bandwidth must be positive")

    def bandwidths(self, cpm: CpmConfig) -> tuple[float, float, float]:
        """(B_u, B_d, B_tot), with B_u from the CPM occupancy and B_u = mu B_tot."""
        b_u = occupied_bandwidth(cpm).b_u
        b_tot = b_u / self.mu_split
        if self.total_bandwidth is not None:
            if not math.isclose(b_tot, self.total_bandwidth, rel_tol=1e-9):
                raise ConfigError(f"B_u/mu = {b_tot:g} Hz disagrees with total_bandwidth "
                                  f"{self.total_bandwidth:g} Hz")
        return b_u, b_tot - b_u, b_tot

    def with_siso_snr(self, geom: IncidenceGeometry, siso_snr: float) -> "LinkConfig":
        """Copy with the transmit power set so that the SISO SNR at ``geom`` equals ``siso_snr``."""
        rho_d, _ = path_loss(geom)
        from dataclasses import replace
        return replace(self, tx_signal_power=siso_snr * rho_d * self.noise_power_slave)


@dataclass(frozen=True)
class ChannelRealization:
    path_count_P: int = 1
    scatter_amp_xi: tuple = (1 + 0j,)
    delay_tau: float = 0.0
    path_variances: tuple = (1.0,)

    def __post_init__(self):
        if self.path_count_P != len(self.scatter_amp_xi) or self.path_count_P != len(self.path_variances):
            raise ConfigError("one amplitude and variance per path")
        if not math.isclose(sum(self.path_variances), 1.0, rel_tol=1e-12):
            raise ConfigError("path variances must sum to 1")


def instantiate_channel(geom: IncidenceGeometry, rayleigh: bool = False,
                        rng: Optional[np.random.Generator] = None) -> ChannelRealization:
    """Single-path channel; unit gain by default, CN(0, 1) amplitude in Rayleigh mode."""
    if rayleigh:
        if rng is None:
            raise ConfigError("Rayleigh mode needs a generator")
        xi = complex(rng.normal() + 1j * rng.normal()) / math.sqrt(2)
    else:
        xi = 1 + 0j
    return ChannelRealization(1, (xi,), geom.tau)


class PathLoss(NamedTuple):
    rho_d: float
    rho_u: float


def path_loss(geom: IncidenceGeometry, kappa: Optional[float] = None) -> PathLoss:
    """Downlink and two-way uplink power losses.

    With ``kappa`` the uplink uses lambda_i^2 lambda_o^2 in the denominator, the
    reflected wavelength being c / (f_i (1 + kappa)).
    """
    lam = geom.wavelength_lambda_i
    d = geom.distance_D
    rho_d = 2 ** 4 * math.pi * d ** 2 / lam ** 2
    if kappa is None:
        rho_u = 2 ** 12 * math.pi * d ** 4 / lam ** 4
    else:
        lam_o = SPEED_OF_LIGHT / (geom.carrier_fi * (1 + kappa))
        rho_u = 2 ** 12 * math.pi * d ** 4 / (lam ** 2 * lam_o ** 2)
    return PathLoss(rho_d, rho_u)


def uplink_amplitude(link: LinkConfig, geom: IncidenceGeometry,
                     channel: Optional[ChannelRealization] = None) -> complex:
    """Geometric amplitude rho scaling the reflected sum, with |rho|^2 = N^2 |xi|^4 / rho_u."""
    xi = 1 + 0j if channel is None else channel.scatter_amp_xi[0]
    return link.n_master * xi * xi / math.sqrt(path_loss(geom).rho_u)


def siso_snr(link: LinkConfig, geom: IncidenceGeometry) -> float:
    """Equivalent single-antenna downlink SNR."""
    return link.tx_signal_power / (path_loss(geom).rho_d * link.noise_power_slave)


def snr_downlink(link: LinkConfig, geom: IncidenceGeometry) -> float:
    """Downlink SNR with full MIMO gain N M_d."""
    return siso_snr(link, geom) * link.n_master * link.m_d_slave


class UplinkSnr(NamedTuple):
    snr: float
    tilde: float


def snr_uplink(link: LinkConfig, geom: IncidenceGeometry, stmm: StmmConfig, cpm: CpmConfig,
               af_sq: float) -> UplinkSnr:
    """Matched-filter uplink SNR bound and its mu-independent factor."""
    if not (-1e-12 <= af_sq <= 1 + 1e-12):
        raise ContractViolation(f"|AF|^2 must lie in [0, 1], got {af_sq}")
    af_sq = min(max(af_sq, 0.0), 1.0)
    _, _, b_tot = link.bandwidths(cpm)
    gain = link.tx_signal_power * link.n_master ** 2 * stmm.m_u ** 2 * af_sq
    snr = gain * cpm.symbol_time_Tu * b_tot / (path_loss(geom).rho_u * link.noise_power_master)
    return UplinkSnr(snr, snr * link.mu_split)


class Regime(enum.Enum):
    NARROWBAND = "narrowband"
    WIDEBAND_NO_ISI = "wideband_no_isi"
    WIDEBAND_ISI = "wideband_isi"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    delta_T: float
    symbol_time_Tu: float
    snr_or_sinr: float = math.nan
    isi_power: Optional[float] = None
    useful_set_size: int = 0
    interfering_set_size: int = 0
    af_sq: float = 1.0
    isi_ci_halfwidth: Optional[float] = None

    def as_record(self) -> dict:
        """Flat key-value view for CSV emission."""
        rec = asdict(self)
        rec["regime"] = self.regime.value
        return rec


def regime_of(delta_T: float, symbol_time: float) -> Regime:
    if delta_T <= NARROWBAND_RATIO * symbol_time:
        return Regime.NARROWBAND
    if delta_T <= symbol_time:
        return Regime.WIDEBAND_NO_ISI
    return Regime.WIDEBAND_ISI


def isi_partition(geom: IncidenceGeometry, stmm: StmmConfig, symbol_time: float) -> np.ndarray:
    """Boolean mask of interfering meta-atoms (delay >= T_u), shape (m_ux, m_uy)."""
    return delay_grid(geom, stmm) >= symbol_time


def coupling_af_sq(architecture, geom: IncidenceGeometry, stmm: StmmConfig, cpm: CpmConfig) -> float:
    """Reflection gain entering the SNR: 1 when compensated, |AF|^2 at the CPM kappa otherwise."""
    if Architecture.parse(architecture) is not Architecture.UNCOMPENSATED:
        return 1.0
    kappa = kappa_of(cpm, geom.carrier_fi)
    return array_factor_sq(CouplingParams(kappa, geom, stmm))


def classify_regime(geom: IncidenceGeometry, stmm: StmmConfig, cpm: CpmConfig,
                    link: Optional[LinkConfig] = None, architecture=None, *,
                    isi_streams: int = 1000, seed: int = 0) -> RegimeReport:
    """Delay regime and the SNR (or SINR) expression that applies to it.

    Architecture A is decoupled perfectly, so it always reports the full-gain
    bound. For B and the uncompensated surface the ISI regime uses the SINR with
    the interference power measured by the waveform oracle.
    """
    arch = Architecture.parse(architecture if architecture is not None else stmm.architecture)
    dT = aperture_delay(geom, stmm)
    T = cpm.symbol_time_Tu
    regime = regime_of(dT, T)
    mask = isi_partition(geom, stmm, T)
    n_int = int(mask.sum())
    n_use = stmm.m_u - n_int
    if link is None:
        return RegimeReport(regime, dT, T, useful_set_size=n_use, interfering_set_size=n_int)
    if regime is Regime.NARROWBAND:
        snr = snr_uplink(link, geom, stmm, cpm, 1.0).snr
        return RegimeReport(regime, dT, T, snr, None, n_use, n_int, 1.0)
    af_sq = coupling_af_sq(arch, geom, stmm, cpm)
    if regime is Regime.WIDEBAND_NO_ISI or arch is Architecture.A:
        snr = snr_uplink(link, geom, stmm, cpm, af_sq).snr
        return RegimeReport(regime, dT, T, snr, None, n_use, n_int, af_sq)
    full = snr_uplink(link, geom, stmm, cpm, 1.0).snr
    isi = normalized_isi(geom, stmm, cpm, arch, isi_streams, seed)
    sinr = n_use ** 2 * af_sq / (isi.value + stmm.m_u ** 2 / full)
    scale = _isi_scale(link, geom, cpm)
    return RegimeReport(regime, dT, T, sinr, isi.value * scale, n_use, n_int, af_sq,
                        isi.ci_halfwidth * scale)


def _isi_scale(link: LinkConfig, geom: IncidenceGeometry, cpm: CpmConfig) -> float:
    rho = uplink_amplitude(link, geom)
    return abs(rho) ** 2 * link.tx_signal_power ** 2 * cpm.symbol_time_Tu ** 2


@lru_cache(maxsize=256)
def normalized_isi(geom, stmm, cpm, architecture, n_streams: int = 1000, seed: int = 0,
                   samples_per_symbol: int = 64) -> Estimate:
    """E[(1/T_u) int |sum over interfering atoms of exp(j gamma)|^2 dt], in atoms^2."""
    from .oracle import interference_statistic
    return interference_statistic(geom, stmm, cpm, architecture, n_streams=n_streams, seed=seed,
                                  samples_per_symbol=samples_per_symbol)


def isi_power(geom: IncidenceGeometry, stmm: StmmConfig, cpm: CpmConfig, link: LinkConfig,
              architecture=None, *, n_streams: int = 1000, seed: int = 0) -> Estimate:
    """Matched-filter ISI power from the interfering atoms, averaged over random streams."""
    arch = Architecture.parse(architecture if architecture is not None else stmm.architecture)
    if regime_of(aperture_delay(geom, stmm), cpm.symbol_time_Tu) is not Regime.WIDEBAND_ISI:
        raise ContractViolation("ISI power is only defined when the aperture delay exceeds T_u")
    est = normalized_isi(geom, stmm, cpm, arch, n_streams, seed)
    scale = _isi_scale(link, geom, cpm)
    return Estimate(est.value * scale, est.ci_halfwidth * scale, est.n)


def cutoff_kappa(mod_index_h: float, m_ux: int, theta: float) -> float:
    """kappa at which the aperture delay equals one symbol (phi = 0, quarter-wave spacing)."""
    return 2 * mod_index_h / (m_ux * math.sin(math.pi / 2 - theta))
