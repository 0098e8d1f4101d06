"""Incidence geometry, meta-atom positions and propagation delays.

Angles follow the metasurface convention: ``theta`` is the elevation measured
from the surface plane (``theta = pi/2`` is normal incidence) and ``phi`` is the
azimuth in the surface plane. All public functions take radians.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError

SPEED_OF_LIGHT = 299_792_458.0


def _cos_from_complement(angle: float) -> float:
    # sin(pi/2 - x) is exactly 0 at x = pi/2, where math.cos returns 6e-17.
    return math.sin(math.pi / 2 - angle)


class Architecture(enum.Enum):
    """Space-time decoupling scheme applied at the metasurface."""

    A = "A"
    B = "B"
    UNCOMPENSATED = "uncompensated"

    @classmethod
    def parse(cls, value: "str | Architecture") -> "Architecture":
        if isinstance(value, cls):
            return value
        key = str(value).strip()
        for member in cls:
            if key.upper() == member.name or key.lower() == member.value.lower():
                return member
        if key.lower() in {"coupled", "coupleduncompensated", "coupled_uncompensated", "none"}:
            return cls.UNCOMPENSATED
        raise ConfigError(f"unknown architecture {value!r}")


@dataclass(frozen=True)
class IncidenceGeometry:
    theta: float
    phi: float = 0.0
    distance_D: float = 100.0
    carrier_fi: float = 30e9

    def __post_init__(self):
        if not (0.0 < self.theta <= math.pi / 2):
            raise ConfigError(f"theta must lie in (0, pi/2], got {self.theta}")
        if not math.isfinite(self.phi):
            raise ConfigError("phi must be finite")
        if not self.distance_D > 0:
            raise ConfigError("distance_D must be positive")
        if not self.carrier_fi > 0:
            raise ConfigError("carrier_fi must be positive")

    @property
    def wavelength_lambda_i(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_fi

    @property
    def tau(self) -> float:
        """One-way MU-SU propagation delay D/c."""
        return self.distance_D / SPEED_OF_LIGHT

    @property
    def direction_cosines(self) -> tuple[float, float]:
        """In-plane direction cosines (cos th cos ph, cos th sin ph)."""
        ct = _cos_from_complement(self.theta)
        return ct * _cos_from_complement(self.phi), ct * math.sin(self.phi)


@dataclass(frozen=True)
class StmmConfig:
    """Planar metasurface layout.

    Spacings are in meters; ``None`` means a quarter of the incident
    wavelength, resolved against the geometry at use time.
    """

    m_ux: int = 100
    m_uy: int = 100
    spacing_dx: Optional[float] = None
    spacing_dy: Optional[float] = None
    architecture: Architecture = Architecture.A

    def __post_init__(self):
        if int(self.m_ux) != self.m_ux or int(self.m_uy) != self.m_uy:
            raise ConfigError("meta-atom counts must be integers")
        if self.m_ux < 1 or self.m_uy < 1:
            raise ConfigError("meta-atom counts must be >= 1")
        for s in (self.spacing_dx, self.spacing_dy):
            if s is not None and not s > 0:
                raise ConfigError("spacing must be positive")
        object.__setattr__(self, "architecture", Architecture.parse(self.architecture))

    @property
    def m_u(self) -> int:
        return self.m_ux * self.m_uy

    def spacing(self, geom: IncidenceGeometry) -> tuple[float, float]:
        quarter = geom.wavelength_lambda_i / 4
        dx = quarter if self.spacing_dx is None else self.spacing_dx
        dy = quarter if self.spacing_dy is None else self.spacing_dy
        return dx, dy

    def positions(self, geom: IncidenceGeometry) -> np.ndarray:
        """Meta-atom positions p_{q,v} in the local frame, shape (m_ux, m_uy, 3)."""
        dx, dy = self.spacing(geom)
        q, v = np.meshgrid(np.arange(self.m_ux), np.arange(self.m_uy), indexing="ij")
        return np.stack([q * dx, v * dy, np.zeros_like(q, dtype=float)], axis=-1)


def wavevector(geom: IncidenceGeometry) -> np.ndarray:
    """Incident wavevector in rad/m."""
    k = 2 * math.pi / geom.wavelength_lambda_i
    ux, uy = geom.direction_cosines
    return k * np.array([ux, uy, math.sin(geom.theta)])


def unit_delays(geom: IncidenceGeometry, stmm: StmmConfig) -> tuple[float, float]:
    """Wavefront delay between adjacent meta-atoms along x and y (seconds)."""
    dx, dy = stmm.spacing(geom)
    ux, uy = geom.direction_cosines
    return dx * ux / SPEED_OF_LIGHT, dy * uy / SPEED_OF_LIGHT


def _check_index(stmm: StmmConfig, q, v):
    q_arr, v_arr = np.asarray(q), np.asarray(v)
    if np.any(q_arr < 0) or np.any(q_arr >= stmm.m_ux) or np.any(v_arr < 0) or np.any(v_arr >= stmm.m_uy):
        raise DomainError(f"meta-atom index ({q}, {v}) outside {stmm.m_ux}x{stmm.m_uy} grid")


def meta_atom_delay(geom: IncidenceGeometry, stmm: StmmConfig, q, v):
    """Residual propagation delay of meta-atom (q, v) w.r.t. the phase center."""
    _check_index(stmm, q, v)
    dtx, dty = unit_delays(geom, stmm)
    return q * dtx + v * dty


def delay_grid(geom: IncidenceGeometry, stmm: StmmConfig) -> np.ndarray:
    """All residual delays, shape (m_ux, m_uy), row-major in (q, v)."""
    dtx, dty = unit_delays(geom, stmm)
    q = np.arange(stmm.m_ux)[:, None]
    v = np.arange(stmm.m_uy)[None, :]
    return q * dtx + v * dty


def aperture_delay(geom: IncidenceGeometry, stmm: StmmConfig) -> float:
    """Maximum delay across the aperture, M_ux dt_x + M_uy dt_y."""
    dtx, dty = unit_delays(geom, stmm)
    return stmm.m_ux * dtx + stmm.m_uy * dty


def spatial_phase(geom: IncidenceGeometry, stmm: StmmConfig, q, v):
    """Retro-reflection phase of meta-atom (q, v), unreduced.

    Equals 4 pi f_i times the residual delay, which for quarter-wavelength
    spacing is pi (q cos th cos ph + v cos th sin ph). Use :func:`wrap_phase`
    for the stored value.
    """
    return 4 * math.pi * geom.carrier_fi * meta_atom_delay(geom, stmm, q, v)


def wrap_phase(phase):
    """Reduce a phase to [0, 2 pi)."""
    return np.mod(phase, 2 * math.pi)
