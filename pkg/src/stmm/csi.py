"""Imperfect elevation estimates: CRLB error model and the resulting reflection loss."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError
from .geometry import IncidenceGeometry, StmmConfig, _cos_from_complement
from .montecarlo import Estimate, block_sizes, generators, ordered_map
from .reflection import dirichlet_ratio

MAX_ERROR = math.pi / 6
BLOCK = 8192


class Estimator(enum.Enum):
    CRLB_ATTAINED = "crlb"
    FIXED_SIGMA = "fixed"


@dataclass(frozen=True)
class CsiErrorModel:
    sigma_theta_sq: float
    estimator: Estimator = Estimator.FIXED_SIGMA
    mc_samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "estimator", Estimator(self.estimator))
        if not self.sigma_theta_sq >= 0 or not math.isfinite(self.sigma_theta_sq):
            raise ConfigError("sigma_theta_sq must be finite and >= 0")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")

    @property
    def sigma_theta(self) -> float:
        return math.sqrt(self.sigma_theta_sq)

    @classmethod
    def from_crlb(cls, theta: float, siso_snr: float, n_master: int, m_d: int,
                  mc_samples: int = 100_000, seed: int = 0) -> "CsiErrorModel":
        s = crlb_sigma_theta(theta, siso_snr, n_master, m_d)
        return cls(s * s, Estimator.CRLB_ATTAINED, mc_samples, seed)


def crlb_sigma_theta(theta: float, siso_snr: float, n_master: int, m_d: int) -> float:
    """Standard deviation (rad) of an elevation estimate that attains the CRLB."""
    if not 0 < theta < math.pi:
        raise DomainError("theta must lie in (0, pi)")
    if not siso_snr > 0:
        raise DomainError("SISO SNR must be positive")
    if m_d < 2:
        raise DomainError("the bound needs at least two receive elements")
    var = 96 / (math.pi ** 2 * math.sin(theta) ** 2 * siso_snr * n_master ** 2 * m_d * (m_d ** 2 - 1))
    return math.sqrt(var)


def truncation_rate(sigma: float) -> float:
    """Fraction of untruncated Gaussian draws that would exceed the pi/6 error limit."""
    if sigma == 0:
        return 0.0
    return float(2 * special.ndtr(-MAX_ERROR / sigma))


def draw_errors(sigma: float, uniforms: np.ndarray) -> np.ndarray:
    """Map uniforms to N(0, sigma^2) truncated to |x| <= pi/6 by inverse CDF.

    Equivalent in law to redrawing every out-of-range sample, and monotone in
    sigma for fixed uniforms, which keeps comparisons across sigma smooth.
    """
    if sigma == 0:
        return np.zeros_like(uniforms)
    edge = special.ndtr(-MAX_ERROR / sigma)
    return sigma * special.ndtri(edge + uniforms * (1 - 2 * edge))


def pointing_loss(geom: IncidenceGeometry, stmm: StmmConfig, kappa: float, errors,
                  exact_phase: bool = False):
    """Per-draw normalized gain (1/M^2)|sin(M x)/sin(x)|^2 for elevation errors ``errors``.

    ``x`` is the linearized residual phase step (pi/4)(2+kappa) dtheta sin(theta),
    or with ``exact_phase`` the unlinearized (pi/4)(2+kappa)(cos theta - cos theta_hat).
    """
    errors = np.asarray(errors, dtype=float)
    if exact_phase:
        step = _cos_from_complement(geom.theta) - np.cos(geom.theta + errors)
    else:
        step = errors * math.sin(geom.theta)
    x = (math.pi / 4) * (2 + kappa) * step
    m = stmm.m_ux
    return np.minimum((dirichlet_ratio(x, m) / m) ** 2, 1.0)


@dataclass(frozen=True)
class CsiLoss:
    estimate: Estimate
    truncation_rate: float

    @property
    def value(self) -> float:
        return self.estimate.value


def _uniform_blocks(seed: int, n: int) -> list[np.ndarray]:
    sizes = block_sizes(n, BLOCK)
    return [rng.random(size) for rng, size in zip(generators(seed, len(sizes)), sizes)]


def csi_loss_factor(geom: IncidenceGeometry, stmm: StmmConfig, kappa: float, err: CsiErrorModel,
                    exact_phase: bool = False, threads: int = 1) -> CsiLoss:
    """Monte-Carlo mean of the pointing-plus-decoupling gain over elevation errors.

    Draws come in fixed-size blocks, each from its own generator, and are
    reduced in block order, so the result is the same for any thread count.
    """
    if geom.phi != 0:
        raise DomainError("the elevation-error model assumes phi = 0")
    sigma = err.sigma_theta
    if sigma == 0:
        return CsiLoss(Estimate(1.0, 0.0, err.mc_samples), 0.0)

    def block_loss(u):
        return pointing_loss(geom, stmm, kappa, draw_errors(sigma, u), exact_phase)

    samples = np.concatenate(ordered_map(block_loss, _uniform_blocks(err.seed, err.mc_samples), threads))
    est = Estimate.from_samples(samples)
    est = Estimate(min(max(est.value, 0.0), 1.0), est.ci_halfwidth, est.n)
    return CsiLoss(est, truncation_rate(sigma))


def ook_baseline_se(uplink_snr_full: float, coupling_af_sq: float, pointing_only_loss: float,
                    mu: float) -> float:
    """Two-level amplitude backscatter: 3 dB matched-filter penalty, no decoupling, 1 bit/symbol cap.

    ``uplink_snr_full`` is the uplink SNR with full reflection gain,
    ``coupling_af_sq`` the uncompensated coupling gain and ``pointing_only_loss``
    the CSI loss without the decoupling term (kappa = 0).
    """
    snr = uplink_snr_full * coupling_af_sq * pointing_only_loss / 2
    return mu * min(1.0, math.log2(1 + snr))


def crossover_snr_db(loss_at_snr_db, target: float, lo_db: float = -60.0, hi_db: float = 40.0,
                     tol_db: float = 1e-3) -> Optional[float]:
    """SISO SNR (dB) where the CSI loss climbs to ``target``; None if not bracketed.

    ``loss_at_snr_db`` should reuse the same random numbers at every call.
    """
    f_lo = loss_at_snr_db(lo_db) - target
    f_hi = loss_at_snr_db(hi_db) - target
    if f_lo > 0 or f_hi < 0:
        return None
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        if loss_at_snr_db(mid) - target < 0:
            lo_db = mid
        else:
            hi_db = mid
    return 0.5 * (lo_db + hi_db)
