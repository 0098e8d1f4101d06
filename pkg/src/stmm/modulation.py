"""Continuous phase modulation of the metasurface temporal phase.

The uplink phase is ``gamma(t) = 2 pi h sum_n z_n q(t - n T_u)`` where the phase
pulse ``q`` rises from 0 to 1/2 over ``L`` symbols. Besides the CPM signal this
module holds the two deterministic phase signals used throughout the tests
(constant and linear phase) behind the same ``value``/``derivative`` surface.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import signal as sps
from scipy import special

from .errors import ConfigError, DomainError


class KnotWarning(UserWarning):
    """Derivative evaluated on a pulse discontinuity; the right-sided value is returned."""


class Psf(enum.Enum):
    RECTANGULAR = "rectangular"
    RAISED_COSINE = "raised_cosine"
    GAUSSIAN = "gaussian"

    @classmethod
    def parse(cls, value) -> "Psf":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"rect": "rectangular", "rec": "rectangular", "rc": "raised_cosine",
                   "raisedcosine": "raised_cosine", "gauss": "gaussian"}
        key = aliases.get(key, key)
        for member in cls:
            if member.value == key:
                return member
        raise ConfigError(f"unknown pulse shape {value!r}")


_DEFAULT_G = {Psf.RECTANGULAR: 1.0, Psf.RAISED_COSINE: 1.5, Psf.GAUSSIAN: None}


@dataclass(frozen=True)
class CpmConfig:
    mod_index_h: float = 1.0
    alphabet_M: int = 2
    memory_L: int = 1
    symbol_time_Tu: float = 1e-9
    psf: Psf = Psf.RECTANGULAR
    psf_energy_factor_g: Optional[float] = None
    gaussian_bt: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "psf", Psf.parse(self.psf))
        if not self.mod_index_h >= 0 or not math.isfinite(self.mod_index_h):
            raise ConfigError("modulation index must be finite and >= 0")
        m = self.alphabet_M
        if int(m) != m or m < 2 or (int(m) & (int(m) - 1)):
            raise ConfigError("alphabet size must be a power of two >= 2")
        if int(self.memory_L) != self.memory_L or self.memory_L < 1:
            raise ConfigError("memory L must be an integer >= 1")
        if not self.symbol_time_Tu > 0:
            raise ConfigError("symbol time must be positive")
        if self.psf_energy_factor_g is None:
            object.__setattr__(self, "psf_energy_factor_g", _DEFAULT_G[self.psf])
        elif not self.psf_energy_factor_g > 0:
            raise ConfigError("g must be positive")
        if not self.gaussian_bt > 0:
            raise ConfigError("gaussian_bt must be positive")

    @property
    def pulse_span(self) -> float:
        return self.memory_L * self.symbol_time_Tu

    @property
    def psf_is_continuous(self) -> bool:
        return self.psf is Psf.RAISED_COSINE


@dataclass(frozen=True)
class SymbolStream:
    """Sequence of odd M-ary symbols z_n in {+-1, +-3, ..., +-(M-1)}."""

    symbols: tuple = ()
    seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(z) for z in self.symbols))
        for z in self.symbols:
            if z % 2 == 0:
                raise ConfigError(f"symbol {z} is not odd")

    def __len__(self):
        return len(self.symbols)

    def validate(self, alphabet_M: int) -> None:
        for z in self.symbols:
            if abs(z) > alphabet_M - 1:
                raise ConfigError(f"symbol {z} outside {alphabet_M}-ary alphabet")

    @classmethod
    def random(cls, alphabet_M: int, n_symbols: int, seed: int) -> "SymbolStream":
        """Equiprobable symbols from a counter-based (Philox) generator keyed by ``seed``."""
        rng = np.random.Generator(np.random.Philox(key=seed))
        b = rng.integers(-(alphabet_M // 2), alphabet_M // 2, size=n_symbols)
        return cls(tuple((2 * b + 1).tolist()), seed)

    @classmethod
    def constant(cls, symbol: int, n_symbols: int) -> "SymbolStream":
        return cls((symbol,) * n_symbols)

    def to_text(self) -> str:
        return "".join(f"{z}\n" for z in self.symbols)

    @classmethod
    def from_text(cls, text: str) -> "SymbolStream":
        return cls(tuple(int(line) for line in text.split() if line.strip()))


def _gauss_antiderivative(x):
    # d/dx [x Q(x) - pdf(x)] = Q(x)
    return x * 0.5 * special.erfc(x / math.sqrt(2)) - np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def _gauss_raw_integral(cfg: CpmConfig, t):
    T = cfg.symbol_time_Tu
    a = 2 * math.pi * cfg.gaussian_bt / T / math.sqrt(math.log(2))
    c = cfg.pulse_span / 2
    return (_gauss_antiderivative(a * (t - c - T / 2)) - _gauss_antiderivative(a * (t - c + T / 2))) / a


def _gauss_norm(cfg: CpmConfig) -> float:
    return float(_gauss_raw_integral(cfg, cfg.pulse_span) - _gauss_raw_integral(cfg, 0.0))


def phase_pulse(cfg: CpmConfig, t):
    """Phase pulse q(t): 0 for t <= 0 and exactly 1/2 for t >= L T_u."""
    t = np.asarray(t, dtype=float)
    span = cfg.pulse_span
    tc = np.clip(t, 0.0, span)
    if cfg.psf is Psf.RECTANGULAR:
        q = tc / (2 * span)
    elif cfg.psf is Psf.RAISED_COSINE:
        q = tc / (2 * span) - np.sin(2 * math.pi * tc / span) / (4 * math.pi)
    else:
        f0 = _gauss_raw_integral(cfg, 0.0)
        q = (_gauss_raw_integral(cfg, tc) - f0) / (2 * _gauss_norm(cfg))
    q = np.where(t >= span, 0.5, q)
    return np.where(t <= 0, 0.0, q)


def frequency_pulse(cfg: CpmConfig, t):
    """Pulse-shaping filter p(t) = dq/dt, supported on [0, L T_u)."""
    t = np.asarray(t, dtype=float)
    span = cfg.pulse_span
    inside = (t >= 0) & (t < span)
    if cfg.psf is Psf.RECTANGULAR:
        p = np.full_like(t, 1 / (2 * span))
    elif cfg.psf is Psf.RAISED_COSINE:
        p = (1 - np.cos(2 * math.pi * t / span)) / (2 * span)
    else:
        T = cfg.symbol_time_Tu
        a = 2 * math.pi * cfg.gaussian_bt / T / math.sqrt(math.log(2))
        c = span / 2
        raw = 0.5 * special.erfc(a * (t - c - T / 2) / math.sqrt(2)) - 0.5 * special.erfc(
            a * (t - c + T / 2) / math.sqrt(2))
        p = raw / (2 * _gauss_norm(cfg))
    return np.where(inside, p, 0.0)


def _symbol_index(cfg: CpmConfig, stream: SymbolStream, t):
    t = np.asarray(t, dtype=float)
    n = len(stream)
    T = cfg.symbol_time_Tu
    if np.any(t < 0) or np.any(t > n * T):
        raise DomainError(f"t outside the stream support [0, {n * T:g}] s")
    return t, np.floor(t / T).astype(np.int64)


def gamma(cfg: CpmConfig, stream: SymbolStream, t):
    """CPM phase in radians at time(s) ``t`` (stream starts at t = 0)."""
    if len(stream) == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    t, k = _symbol_index(cfg, stream, t)
    z = np.asarray(stream.symbols, dtype=float)
    n_sym = len(z)
    L = cfg.memory_L
    T = cfg.symbol_time_Tu
    cum = np.concatenate([[0.0], np.cumsum(z)])
    total = 0.5 * cum[np.clip(k - L + 1, 0, n_sym)]
    for j in range(L):
        n = k - j
        ok = (n >= 0) & (n < n_sym)
        nn = np.clip(n, 0, n_sym - 1)
        total = total + np.where(ok, z[nn] * phase_pulse(cfg, t - n * T), 0.0)
    return 2 * math.pi * cfg.mod_index_h * total


def on_knot(cfg: CpmConfig, t, atol: float = 1e-12):
    """True where ``t`` sits on a symbol edge (a pulse discontinuity for non-smooth pulses)."""
    x = np.asarray(t, dtype=float) / cfg.symbol_time_Tu
    return np.abs(x - np.round(x)) <= atol


def gamma_derivative(cfg: CpmConfig, stream: SymbolStream, t):
    """Instantaneous phase rate in rad/s.

    On a rectangular or truncated-Gaussian pulse edge the right-sided value is
    returned and a :class:`KnotWarning` is emitted.
    """
    if len(stream) == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    t, k = _symbol_index(cfg, stream, t)
    if not cfg.psf_is_continuous and np.any(on_knot(cfg, t)):
        warnings.warn("derivative sampled on a pulse edge", KnotWarning, stacklevel=2)
    z = np.asarray(stream.symbols, dtype=float)
    n_sym = len(z)
    T = cfg.symbol_time_Tu
    total = np.zeros_like(t)
    for j in range(cfg.memory_L):
        n = k - j
        ok = (n >= 0) & (n < n_sym)
        nn = np.clip(n, 0, n_sym - 1)
        total = total + np.where(ok, z[nn] * frequency_pulse(cfg, t - n * T), 0.0)
    return 2 * math.pi * cfg.mod_index_h * total


class Bandwidth(NamedTuple):
    b_u: float
    epsilon: float


def occupied_bandwidth(cfg: CpmConfig) -> Bandwidth:
    """99%-energy bandwidth approximation and time-bandwidth product B_u T_u."""
    g = cfg.psf_energy_factor_g
    if g is None:
        raise ConfigError("no energy factor g for this pulse; set psf_energy_factor_g or use "
                          "empirical_occupied_bandwidth")
    h, M, L, T = cfg.mod_index_h, cfg.alphabet_M, cfg.memory_L, cfg.symbol_time_Tu
    b_u = (h / T) * math.sqrt(g * (M * M - 1) / (3 * L)) + g / (T * L)
    return Bandwidth(b_u, b_u * T)


def kappa_of(cfg: CpmConfig, carrier_fi: float) -> float:
    """Peak fractional frequency shift h / (2 T_u f_i)."""
    if not carrier_fi > 0:
        raise DomainError("carrier must be positive")
    return cfg.mod_index_h / (2 * cfg.symbol_time_Tu * carrier_fi)


def symbol_time_for_kappa(mod_index_h: float, kappa: float, carrier_fi: float) -> float:
    """Inverse of :func:`kappa_of`: the T_u that yields a given kappa."""
    if not kappa > 0:
        raise DomainError("kappa must be positive to define a symbol time")
    return mod_index_h / (2 * kappa * carrier_fi)


def empirical_occupied_bandwidth(cfg: CpmConfig, n_symbols: int = 100_000, oversample: int = 32,
                                 seed: int = 0, fraction: float = 0.99,
                                 nperseg: int = 4096) -> float:
    """Two-sided bandwidth holding ``fraction`` of the energy of exp(j gamma), in Hz.

    Welch periodogram over a random equiprobable stream.
    """
    stream = SymbolStream.random(cfg.alphabet_M, n_symbols, seed)
    fs = oversample / cfg.symbol_time_Tu
    t = (np.arange(n_symbols * oversample) + 0.5) / fs
    s = np.exp(1j * gamma(cfg, stream, t))
    f, pxx = sps.welch(s, fs=fs, nperseg=nperseg, return_onesided=False, window="hann")
    order = np.argsort(f)
    f, pxx = f[order], pxx[order]
    cdf = np.cumsum(pxx) / np.sum(pxx)
    tail = (1 - fraction) / 2
    lo = f[np.searchsorted(cdf, tail)]
    hi = f[np.searchsorted(cdf, 1 - tail)]
    return float(hi - lo)


# -- phase signals -----------------------------------------------------------

class PhaseSignal:
    """A temporal phase gamma(t) with its first derivative."""

    support: tuple = (-math.inf, math.inf)

    def value(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantPhase(PhaseSignal):
    phase: float = 0.0

    def value(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.phase)

    def derivative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class LinearPhase(PhaseSignal):
    """Frequency shift gamma(t) = 2 pi kappa f_i t + offset."""

    kappa: float
    carrier_fi: float
    offset: float = 0.0

    def value(self, t):
        return 2 * math.pi * self.kappa * self.carrier_fi * np.asarray(t, dtype=float) + self.offset

    def derivative(self, t):
        return np.full_like(np.asarray(t, dtype=float), 2 * math.pi * self.kappa * self.carrier_fi)


@dataclass(frozen=True)
class CpmSignal(PhaseSignal):
    cfg: CpmConfig
    stream: SymbolStream = field(default_factory=SymbolStream)

    @property
    def support(self):
        return (0.0, len(self.stream) * self.cfg.symbol_time_Tu)

    def value(self, t):
        return gamma(self.cfg, self.stream, t)

    def derivative(self, t):
        return gamma_derivative(self.cfg, self.stream, t)


def as_phase_signal(cfg: Optional[CpmConfig], signal) -> PhaseSignal:
    """Accept a PhaseSignal, a SymbolStream (paired with ``cfg``) or a symbol sequence."""
    if isinstance(signal, PhaseSignal):
        return signal
    if cfg is None:
        raise ConfigError("a CPM configuration is required to interpret a symbol stream")
    if not isinstance(signal, SymbolStream):
        signal = SymbolStream(tuple(signal))
    signal.validate(cfg.alphabet_M)
    return CpmSignal(cfg, signal)
