"""Sectioned key-value scenario files.

Sections are ``geometry``, ``stmm``, ``cpm``, ``link``, ``csi``, ``oracle`` and
an optional ``sweep``. Angles are stored in radians; ``*_deg`` keys and a few
other conveniences (``kappa`` instead of ``symbol_time``, ``siso_snr_db``
instead of ``tx_power``) are accepted on input and normalized away, so
serializing a parsed scenario and parsing it again gives an equal object.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import ConfigError, UsageError
from .geometry import IncidenceGeometry, StmmConfig
from .link import LinkConfig
from .modulation import CpmConfig, symbol_time_for_kappa

SWEEP_PARAMETERS = ("kappa", "theta", "distance", "stmm_side", "siso_snr", "mu")
OBSERVABLES = ("af_sq_db", "squint_deg", "eta_d", "eta_u", "eta_total", "regime", "csi_loss",
               "sigma_theta_deg")


@dataclass(frozen=True)
class CsiSettings:
    """Elevation-error model: ``sigma_theta`` in rad, or None to use the CRLB at the link SNR."""

    sigma_theta: Optional[float] = None
    mc_samples: int = 100_000
    exact_phase: bool = False

    def __post_init__(self):
        if self.sigma_theta is not None and not self.sigma_theta >= 0:
            raise ConfigError("sigma_theta must be >= 0")
        if self.mc_samples < 1:
            raise ConfigError("mc_samples must be >= 1")


@dataclass(frozen=True)
class OracleSettings:
    duration_symbols: int = 64
    oversampling: float = 16.0
    downlink: str = "constant"

    def __post_init__(self):
        if self.duration_symbols < 1:
            raise ConfigError("duration_symbols must be >= 1")
        if self.oversampling < 16:
            raise ConfigError("oversampling must be >= 16")
        if self.downlink not in ("constant", "random_qpsk"):
            raise ConfigError(f"unknown downlink waveform {self.downlink!r}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    points: int
    scale: str = "linear"
    outputs: tuple = ("af_sq_db",)

    def __post_init__(self):
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.parameter not in SWEEP_PARAMETERS:
            raise UsageError(f"cannot sweep {self.parameter!r}; choose from {', '.join(SWEEP_PARAMETERS)}")
        for name in self.outputs:
            if name not in OBSERVABLES:
                raise UsageError(f"unknown observable {name!r}")
        if not self.outputs:
            raise UsageError("a sweep needs at least one observable")
        if self.points < 2:
            raise UsageError("a sweep needs at least two points")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)) or not self.start < self.stop:
            raise UsageError("sweep range needs start < stop")
        if self.scale not in ("linear", "log"):
            raise UsageError("scale must be linear or log")
        if self.scale == "log" and self.start <= 0:
            raise UsageError("log sweeps need a positive start")
        lo, hi = _DOMAINS[self.parameter]
        if self.start < lo[0] or (not lo[1] and self.start == lo[0]) or self.stop > hi[0] or (
                not hi[1] and self.stop == hi[0]):
            raise UsageError(f"{self.parameter} range [{self.start}, {self.stop}] leaves its domain")

    def grid(self):
        import numpy as np
        if self.scale == "log":
            values = np.geomspace(self.start, self.stop, self.points)
        else:
            values = np.linspace(self.start, self.stop, self.points)
        if self.parameter == "stmm_side":
            values = np.unique(np.round(values).astype(int))
            return [int(v) for v in values]
        return [float(v) for v in values]


# (bound, inclusive) pairs per swept parameter
_DOMAINS = {
    "kappa": ((0.0, True), (1.0, False)),
    "theta": ((0.0, False), (math.pi / 2, True)),
    "distance": ((0.0, False), (math.inf, False)),
    "stmm_side": ((1.0, True), (math.inf, False)),
    "siso_snr": ((-math.inf, False), (math.inf, False)),
    "mu": ((0.0, False), (1.0, False)),
}


@dataclass(frozen=True)
class Scenario:
    geometry: IncidenceGeometry
    stmm: StmmConfig = field(default_factory=StmmConfig)
    cpm: CpmConfig = field(default_factory=CpmConfig)
    link: LinkConfig = field(default_factory=LinkConfig)
    csi: CsiSettings = field(default_factory=CsiSettings)
    oracle: OracleSettings = field(default_factory=OracleSettings)
    sweep: Optional[SweepSpec] = None


def _float(section, key, default=None):
    if key not in section:
        return default
    try:
        return float(section[key])
    except ValueError as exc:
        raise ConfigError(f"{key} = {section[key]!r} is not a number") from exc


def _int(section, key, default=None):
    if key not in section:
        return default
    try:
        return int(section[key])
    except ValueError as exc:
        raise ConfigError(f"{key} = {section[key]!r} is not an integer") from exc


def _optional(section, key):
    raw = section.get(key)
    if raw is None or raw.strip().lower() in ("", "none", "auto"):
        return None
    return _float(section, key)


def _angle(section, key, default):
    if key in section and f"{key}_deg" in section:
        raise ConfigError(f"give either {key} or {key}_deg, not both")
    if f"{key}_deg" in section:
        return math.radians(_float(section, f"{key}_deg"))
    return _float(section, key, default)


_KNOWN = {
    "geometry": {"theta", "theta_deg", "phi", "phi_deg", "distance", "carrier"},
    "stmm": {"m_ux", "m_uy", "spacing_dx", "spacing_dy", "architecture"},
    "cpm": {"h", "alphabet", "memory", "symbol_time", "kappa", "psf", "g", "gaussian_bt"},
    "link": {"n_master", "m_d", "tx_power", "siso_snr_db", "noise_power_master", "noise_power_slave", "mu",
             "total_bandwidth"},
    "csi": {"sigma_theta", "sigma_theta_deg", "mc_samples", "exact_phase"},
    "oracle": {"duration_symbols", "oversampling", "downlink"},
    "sweep": {"parameter", "start", "stop", "points", "scale", "outputs"},
}


def parse_scenario(text: str) -> Scenario:
    """Build a Scenario from config text; raises ConfigError (UsageError for bad sweeps)."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name in cp.sections():
        if name not in _KNOWN:
            raise ConfigError(f"unknown section [{name}]")
        unknown = set(cp[name]) - _KNOWN[name]
        if unknown:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    if "geometry" not in cp:
        raise ConfigError("missing [geometry] section")
    sec = {name: (cp[name] if name in cp else {}) for name in _KNOWN}

    g = sec["geometry"]
    theta = _angle(g, "theta", None)
    if theta is None:
        raise ConfigError("geometry needs theta or theta_deg")
    geom = IncidenceGeometry(theta, _angle(g, "phi", 0.0), _float(g, "distance", 100.0),
                             _float(g, "carrier", 30e9))

    s = sec["stmm"]
    stmm = StmmConfig(_int(s, "m_ux", 100), _int(s, "m_uy", 100), _optional(s, "spacing_dx"),
                      _optional(s, "spacing_dy"), s.get("architecture", "A"))

    c = sec["cpm"]
    h = _float(c, "h", 1.0)
    if "symbol_time" in c and "kappa" in c:
        raise ConfigError("give either symbol_time or kappa, not both")
    if "kappa" in c:
        symbol_time = symbol_time_for_kappa(h, _float(c, "kappa"), geom.carrier_fi)
    else:
        symbol_time = _float(c, "symbol_time", 1e-9)
    cpm = CpmConfig(h, _int(c, "alphabet", 2), _int(c, "memory", 1), symbol_time, c.get("psf", "rectangular"),
                    _optional(c, "g"), _float(c, "gaussian_bt", 0.3))

    k = sec["link"]
    link = LinkConfig(_int(k, "n_master", 512), _int(k, "m_d", 32), _float(k, "tx_power", 1.0),
                      _float(k, "noise_power_master", 1.0), _optional(k, "noise_power_slave"),
                      _float(k, "mu", 0.5), _optional(k, "total_bandwidth"))
    if "siso_snr_db" in k:
        if "tx_power" in k:
            raise ConfigError("give either tx_power or siso_snr_db, not both")
        link = link.with_siso_snr(geom, 10 ** (_float(k, "siso_snr_db") / 10))

    e = sec["csi"]
    sigma = _optional(e, "sigma_theta")
    if "sigma_theta_deg" in e:
        if sigma is not None:
            raise ConfigError("give either sigma_theta or sigma_theta_deg, not both")
        sigma = math.radians(_float(e, "sigma_theta_deg"))
    exact = e.get("exact_phase", "false").strip().lower()
    if exact not in ("true", "false", "yes", "no", "1", "0"):
        raise ConfigError("exact_phase must be a boolean")
    csi = CsiSettings(sigma, _int(e, "mc_samples", 100_000), exact in ("true", "yes", "1"))

    o = sec["oracle"]
    oracle = OracleSettings(_int(o, "duration_symbols", 64), _float(o, "oversampling", 16.0),
                            o.get("downlink", "constant"))

    sweep = None
    if "sweep" in cp:
        w = cp["sweep"]
        for key in ("parameter", "start", "stop", "points"):
            if key not in w:
                raise UsageError(f"[sweep] needs {key}")
        outputs = tuple(x.strip() for x in w.get("outputs", "af_sq_db").split(",") if x.strip())
        try:
            sweep = SweepSpec(w["parameter"].strip(), _float(w, "start"), _float(w, "stop"), _int(w, "points"),
                              w.get("scale", "linear").strip(), outputs)
        except ConfigError as exc:
            raise UsageError(str(exc)) from exc
    return Scenario(geom, stmm, cpm, link, csi, oracle, sweep)


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def serialize_scenario(scn: Scenario) -> str:
    """Config text in canonical form (radians, explicit symbol time and transmit power)."""
    g, s, c, k, e, o = scn.geometry, scn.stmm, scn.cpm, scn.link, scn.csi, scn.oracle
    sections = {
        "geometry": {"theta": g.theta, "phi": g.phi, "distance": g.distance_D, "carrier": g.carrier_fi},
        "stmm": {"m_ux": s.m_ux, "m_uy": s.m_uy, "spacing_dx": s.spacing_dx, "spacing_dy": s.spacing_dy,
                 "architecture": s.architecture.value},
        "cpm": {"h": c.mod_index_h, "alphabet": c.alphabet_M, "memory": c.memory_L,
                "symbol_time": c.symbol_time_Tu, "psf": c.psf.value, "g": c.psf_energy_factor_g,
                "gaussian_bt": c.gaussian_bt},
        "link": {"n_master": k.n_master, "m_d": k.m_d_slave, "tx_power": k.tx_signal_power,
                 "noise_power_master": k.noise_power_master, "noise_power_slave": k.noise_power_slave,
                 "mu": k.mu_split, "total_bandwidth": k.total_bandwidth},
        "csi": {"sigma_theta": e.sigma_theta, "mc_samples": e.mc_samples, "exact_phase": e.exact_phase},
        "oracle": {"duration_symbols": o.duration_symbols, "oversampling": o.oversampling,
                   "downlink": o.downlink},
    }
    if scn.sweep is not None:
        w = scn.sweep
        sections["sweep"] = {"parameter": w.parameter, "start": float(w.start), "stop": float(w.stop),
                             "points": w.points, "scale": w.scale, "outputs": ", ".join(w.outputs)}
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {_fmt(val)}" for key, val in values.items())
        lines.append("")
    return "\n".join(lines)


def with_parameter(scn: Scenario, parameter: str, value) -> Scenario:
    """Copy of ``scn`` with one sweepable parameter replaced."""
    if parameter == "kappa":
        h = scn.cpm.mod_index_h
        kappa = max(float(value), 1e-12)
        return replace(scn, cpm=replace(scn.cpm, symbol_time_Tu=symbol_time_for_kappa(h, kappa, scn.geometry.carrier_fi)))
    if parameter == "theta":
        return replace(scn, geometry=replace(scn.geometry, theta=float(value)))
    if parameter == "distance":
        return replace(scn, geometry=replace(scn.geometry, distance_D=float(value)))
    if parameter == "stmm_side":
        return replace(scn, stmm=replace(scn.stmm, m_ux=int(value), m_uy=int(value)))
    if parameter == "siso_snr":
        return replace(scn, link=scn.link.with_siso_snr(scn.geometry, 10 ** (float(value) / 10)))
    if parameter == "mu":
        return replace(scn, link=replace(scn.link, mu_split=float(value)))
    raise UsageError(f"cannot set {parameter!r}")
