"""Full-duplex spectral efficiency and the optimal uplink/downlink bandwidth split."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

MU_LO = 1e-6
MU_HI = 1 - 1e-6
LOG2E = 1 / math.log(2)


@dataclass(frozen=True)
class SpectralEfficiency:
    eta_d: float
    eta_u: float
    eta_total: float
    mu: float
    degenerate: bool = False


def spectral_efficiency(snr_d: float, snr_u: float, mu: float) -> SpectralEfficiency:
    """(1 - mu) log2(1 + snr_d) + mu log2(1 + snr_u).

    At mu = 0 or 1 only one link carries data; the value is still returned
    and flagged as degenerate.
    """
    if snr_d < 0 or snr_u < 0:
        raise DomainError("SNRs must be >= 0")
    if not 0 <= mu <= 1:
        raise DomainError(f"mu must lie in [0, 1], got {mu}")
    eta_d = (1 - mu) * math.log2(1 + snr_d)
    eta_u = mu * math.log2(1 + snr_u)
    return SpectralEfficiency(eta_d, eta_u, eta_d + eta_u, mu, mu in (0, 1))


def efficiency_at_split(snr_d: float, tilde_snr_u: float, mu):
    """Total efficiency when the uplink SNR is tilde_snr_u / mu (vectorized over mu)."""
    mu = np.asarray(mu, dtype=float)
    out = (1 - mu) * np.log2(1 + snr_d) + mu * np.log2(1 + tilde_snr_u / mu)
    return float(out) if out.ndim == 0 else out


def split_derivative(snr_d: float, tilde_snr_u: float, mu: float) -> float:
    """d eta / d mu for the split model of :func:`efficiency_at_split`."""
    return (-math.log2(1 + snr_d) - tilde_snr_u * LOG2E / (tilde_snr_u + mu)
            + math.log2(1 + tilde_snr_u / mu))


@dataclass(frozen=True)
class OptimalSplit:
    mu: float
    boundary: bool
    derivative: float


def optimal_mu(snr_d: float, tilde_snr_u: float, tol: float = 1e-10) -> OptimalSplit:
    """Bandwidth split maximizing total efficiency, by bisection on the derivative.

    The derivative is decreasing in mu, so a missing sign change means the
    optimum sits at a boundary, which is returned with ``boundary=True``.
    """
    if snr_d < 0 or tilde_snr_u < 0 or (snr_d == 0 and tilde_snr_u == 0):
        raise DomainError("need snr_d > 0 or tilde_snr_u > 0, both non-negative")
    lo, hi = MU_LO, MU_HI
    d_lo, d_hi = split_derivative(snr_d, tilde_snr_u, lo), split_derivative(snr_d, tilde_snr_u, hi)
    if d_lo <= 0:
        return OptimalSplit(lo, True, d_lo)
    if d_hi >= 0:
        return OptimalSplit(hi, True, d_hi)
    mid, d_mid = lo, d_lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        d_mid = split_derivative(snr_d, tilde_snr_u, mid)
        if abs(d_mid) < tol or hi - lo < 1e-15:
            break
        if d_mid > 0:
            lo = mid
        else:
            hi = mid
    return OptimalSplit(mid, False, d_mid)
