"""Metasurface reflection response under space-time phase coupling."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, KnotSamplingError
from .geometry import (Architecture, IncidenceGeometry, StmmConfig, _cos_from_complement,
                       delay_grid, meta_atom_delay, spatial_phase, unit_delays)
from .modulation import CpmSignal, PhaseSignal, on_knot

SINGULAR_TOL = 1e-8


@dataclass(frozen=True)
class CouplingParams:
    kappa: float
    geometry: IncidenceGeometry
    stmm: StmmConfig

    def __post_init__(self):
        if not math.isfinite(self.kappa) or abs(self.kappa) >= 1:
            raise ConfigError(f"|kappa| must be < 1, got {self.kappa}")

    @property
    def shift_fs(self) -> float:
        return self.kappa * self.geometry.carrier_fi

    @property
    def output_fo(self) -> float:
        return self.geometry.carrier_fi * (1 + self.kappa)


class _Evanescent:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "EVANESCENT"

    def __bool__(self):
        return False


EVANESCENT = _Evanescent()


def dirichlet_ratio(half_angle, m: int):
    """sin(m x) / sin(x), continuous through the zeros of sin(x)."""
    x = np.asarray(half_angle, dtype=float)
    s = np.sin(x)
    singular = np.abs(s) < SINGULAR_TOL
    safe = np.where(singular, 1.0, s)
    out = np.sin(m * x) / safe
    if np.any(singular):
        k = np.round(x / math.pi)
        eps = x - k * math.pi
        sign = np.where(np.mod(k * (m - 1), 2) == 0, 1.0, -1.0)
        limit = sign * m * (1 - (m * m - 1) * eps * eps / 6)
        out = np.where(singular, limit, out)
    return out


def _axis_sum(step_phase, m: int):
    """sum_{q<m} exp(-j q a) in closed form."""
    half = np.asarray(step_phase, dtype=float) / 2
    return np.exp(-1j * (m - 1) * half) * dirichlet_ratio(half, m)


def array_factor_2d(params: CouplingParams) -> complex:
    """Normalized array factor of a linear phase ramp at fractional shift kappa.

    The unit-modulus time factor exp(j 2 pi f_i kappa t) is dropped.
    """
    dtx, dty = unit_delays(params.geometry, params.stmm)
    w = 2 * math.pi * params.geometry.carrier_fi * params.kappa
    ax = _axis_sum(w * dtx, params.stmm.m_ux)
    ay = _axis_sum(w * dty, params.stmm.m_uy)
    return complex(ax * ay / params.stmm.m_u)


def array_factor_sq(params: CouplingParams) -> float:
    """|AF|^2, clamped to 1 against rounding."""
    return min(1.0, abs(array_factor_2d(params)) ** 2)


def array_factor_1d(theta: float, kappa, m_u: int, spacing_wavelengths: float = 0.5):
    """Reflection gain of a linear array at shift kappa.

    The default half-wavelength phase step gives
    ``|sin((pi/2) M kappa cos th) / (M sin((pi/2) kappa cos th))|^2``; pass
    ``spacing_wavelengths=0.25`` for the quarter-wavelength layout, which
    coincides with :func:`array_factor_2d` for a single row at ``phi = 0``.
    """
    half = math.pi * spacing_wavelengths * np.asarray(kappa, dtype=float) * _cos_from_complement(theta)
    g = (dirichlet_ratio(half, m_u) / m_u) ** 2
    g = np.minimum(g, 1.0)
    return float(g) if np.ndim(g) == 0 else g


def squint_angle(theta: float, kappa: float):
    """Direction of maximum reflection, or EVANESCENT when (1+kappa) cos th leaves [-1, 1]."""
    arg = (1 + kappa) * _cos_from_complement(theta)
    if abs(arg) > 1:
        return EVANESCENT
    return math.acos(arg)


def applied_phase(architecture, geom: IncidenceGeometry, stmm: StmmConfig, gamma: PhaseSignal,
                  t, q, v):
    """Phase driven on meta-atom (q, v) at its local time ``t``."""
    arch = Architecture.parse(architecture)
    dt = meta_atom_delay(geom, stmm, q, v)
    base = spatial_phase(geom, stmm, q, v)
    t = np.asarray(t, dtype=float)
    if arch is Architecture.A:
        return base + gamma.value(t + dt)
    if arch is Architecture.B:
        if isinstance(gamma, CpmSignal) and not gamma.cfg.psf_is_continuous and np.any(on_knot(gamma.cfg, t)):
            raise KnotSamplingError("architecture B needs gamma' off the pulse edges; sample between knots")
        return base + gamma.value(t) + gamma.derivative(t) * dt
    return base + gamma.value(t)


def experienced_phase(architecture, geom, stmm, gamma, t, q, v):
    """Phase carried by the wave leaving meta-atom (q, v), referenced to phase-center time ``t``."""
    dt = meta_atom_delay(geom, stmm, q, v)
    return applied_phase(architecture, geom, stmm, gamma, np.asarray(t, dtype=float) - dt, q, v)


def phase_law(architecture, geom: IncidenceGeometry, stmm: StmmConfig, gamma: PhaseSignal, t, q, v):
    """Decoupling phase law of meta-atom (q, v).

    Architecture A pre-advances gamma by the meta-atom delay, architecture B uses
    the first-order correction gamma + gamma' dt. The uncompensated baseline
    returns the phase the wavefront actually experiences, phi + gamma(t - dt).
    """
    arch = Architecture.parse(architecture)
    if arch is Architecture.UNCOMPENSATED:
        return experienced_phase(arch, geom, stmm, gamma, t, q, v)
    return applied_phase(arch, geom, stmm, gamma, t, q, v)


def coupling_channel_gain(geom: IncidenceGeometry, stmm: StmmConfig, gamma: PhaseSignal, t,
                          architecture=Architecture.UNCOMPENSATED):
    """Multiplicative MU<-SU channel h_u(t), summed atom by atom.

    ``t`` is MU time; gamma is evaluated at t - tau - dt for the uncompensated
    surface (the full two-way carrier term and spatial phase are kept).
    """
    arch = Architecture.parse(architecture)
    delays = delay_grid(geom, stmm).ravel()
    q, v = np.divmod(np.arange(stmm.m_u), stmm.m_uy)
    carrier = -4 * math.pi * geom.carrier_fi * delays + spatial_phase(geom, stmm, q, v)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty(t_arr.shape, dtype=complex)
    for i, ti in enumerate(t_arr):
        local = ti - geom.tau - delays
        if arch is Architecture.A:
            g = gamma.value(local + delays)
        elif arch is Architecture.B:
            g = gamma.value(local) + gamma.derivative(local) * delays
        else:
            g = gamma.value(local)
        out[i] = np.sum(np.exp(1j * (carrier + g)))
    return complex(out[0]) if np.ndim(t) == 0 else out
