"""Brute-force time-domain simulator of the retro-reflected uplink.

Every meta-atom's contribution is synthesized sample by sample with its own
propagation delay on both the downlink waveform and the metasurface phase,
then summed. Nothing here uses the closed-form array factors, which is what
makes it usable as an independent check of them.

Meta-atoms with bit-identical delays produce bit-identical contributions, so
they are merged into one term weighted by their multiplicity (for ``phi = 0``
a whole column collapses). Terms are always summed in row-major (q, v) order.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special

from .errors import ConfigError, DomainError
from .geometry import (Architecture, IncidenceGeometry, StmmConfig, aperture_delay, delay_grid,
                       spatial_phase)
from .link import LinkConfig, isi_partition, uplink_amplitude
from .modulation import (CpmConfig, KnotWarning, PhaseSignal, SymbolStream, as_phase_signal,
                         occupied_bandwidth)
from .montecarlo import Estimate, generators

MIN_OVERSAMPLING = 16
INTERP_TAPS = 32
KAISER_BETA = 8.0
_CHUNK = 1 << 21


@dataclass(frozen=True)
class DownlinkWaveform:
    """MU->SU baseband s_d(t).

    ``constant`` is a constant-envelope tone of power ``power``. ``random_qpsk``
    is a unit-rate QPSK symbol train band-limited by Kaiser-windowed sinc
    interpolation (32 taps), so any fractional delay is applied by evaluating
    the interpolant at the delayed instant.
    """

    mode: str = "constant"
    power: float = 1.0
    symbol_period: float = 1e-9
    t_start: float = 0.0
    symbols: tuple = ()

    def __post_init__(self):
        if self.mode not in ("constant", "random_qpsk"):
            raise ConfigError(f"unknown downlink waveform {self.mode!r}")
        if self.power < 0:
            raise ConfigError("downlink power must be >= 0")

    @classmethod
    def random_qpsk(cls, power: float, symbol_period: float, t_start: float, n_symbols: int,
                    seed: int) -> "DownlinkWaveform":
        rng = generators(seed, 1)[0]
        bits = rng.integers(0, 2, size=(n_symbols, 2))
        syms = ((2 * bits[:, 0] - 1) + 1j * (2 * bits[:, 1] - 1)) / math.sqrt(2)
        return cls("random_qpsk", power, symbol_period, t_start, tuple(syms.tolist()))

    def evaluate(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.mode == "constant":
            return np.full(t.shape, math.sqrt(self.power), dtype=complex)
        a = np.asarray(self.symbols, dtype=complex)
        x = (t - self.t_start) / self.symbol_period
        base = np.floor(x)
        pos = (x - base) * KERNEL_RES
        base = base.astype(np.int64)
        cell = pos.astype(np.int64)
        w1 = pos - cell
        half = INTERP_TAPS // 2
        # zero padding replaces per-tap bounds checks
        lo = min(int(base.min()) - half + 1, 0)
        hi = max(int(base.max()) + half, a.size - 1)
        padded = np.zeros(hi - lo + 1, dtype=complex)
        padded[-lo:-lo + a.size] = a
        k = base - lo - half + 1
        # table position of the tap at offset j is (half - j + frac) * KERNEL_RES
        idx = cell + (2 * half - 1) * KERNEL_RES
        out = np.zeros(t.shape, dtype=complex)
        for _ in range(2 * half):
            out += padded[k] * (_KERNEL[idx] + w1 * _SLOPE[idx])
            k += 1
            idx -= KERNEL_RES
        return math.sqrt(self.power) * out


def _kaiser_sinc(u):
    half = INTERP_TAPS // 2
    w = special.i0(KAISER_BETA * np.sqrt(np.clip(1 - (u / half) ** 2, 0, None))) / special.i0(KAISER_BETA)
    return np.sinc(u) * w


# windowed-sinc kernel tabulated on [-16, 16]; linear interpolation error stays below 1e-7
KERNEL_RES = 4096
_KERNEL = _kaiser_sinc(np.arange(INTERP_TAPS * KERNEL_RES + 2) / KERNEL_RES - INTERP_TAPS // 2)
_SLOPE = np.diff(_KERNEL)


@dataclass(frozen=True)
class WaveformScenario:
    sample_rate: float
    duration_symbols: int
    geom: IncidenceGeometry
    stmm: StmmConfig
    cpm: CpmConfig
    link: LinkConfig = field(default_factory=LinkConfig)
    downlink_waveform: str = "constant"
    phase_law_choice: Architecture = Architecture.UNCOMPENSATED
    downlink_symbol_period: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "phase_law_choice", Architecture.parse(self.phase_law_choice))
        if self.downlink_waveform not in ("constant", "random_qpsk"):
            raise ConfigError(f"unknown downlink waveform {self.downlink_waveform!r}")
        if self.duration_symbols < 1:
            raise ConfigError("duration must cover at least one symbol")
        need = self.minimum_sample_rate(self.geom, self.stmm, self.cpm)
        if self.sample_rate < need * (1 - 1e-12):
            raise ConfigError(f"sample rate {self.sample_rate:g} Hz below the required {need:g} Hz")

    @staticmethod
    def minimum_sample_rate(geom, stmm, cpm) -> float:
        """16 x max(B_u, 1/dT); the delay term is dropped when the aperture delay is zero."""
        b_u = occupied_bandwidth(cpm).b_u
        dT = aperture_delay(geom, stmm)
        rate = max(b_u, 1 / dT) if dT > 0 else b_u
        return MIN_OVERSAMPLING * rate

    @classmethod
    def oversampled(cls, geom, stmm, cpm, duration_symbols: int, oversampling: float = MIN_OVERSAMPLING,
                    **kwargs) -> "WaveformScenario":
        """Scenario at ``oversampling`` x max(B_u, 1/dT), rounded up to whole samples per symbol."""
        base = cls.minimum_sample_rate(geom, stmm, cpm) / MIN_OVERSAMPLING * oversampling
        sps = math.ceil(base * cpm.symbol_time_Tu - 1e-9)
        rate = sps / cpm.symbol_time_Tu
        return cls(max(rate, base), duration_symbols, geom, stmm, cpm, **kwargs)

    @property
    def symbol_time(self) -> float:
        return self.cpm.symbol_time_Tu

    @property
    def samples_per_symbol(self) -> float:
        return self.sample_rate * self.symbol_time

    @property
    def guard_symbols(self) -> int:
        """Symbols before the record so every delayed phase stays inside the stream."""
        max_delay = float(delay_grid(self.geom, self.stmm).max())
        return int(math.ceil(max_delay / self.symbol_time)) + 1

    @property
    def required_symbols(self) -> int:
        return self.guard_symbols + self.duration_symbols

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_symbols * self.samples_per_symbol))

    @property
    def record_start(self) -> float:
        """MU time at which the recorded window opens."""
        return self.geom.tau + self.guard_symbols * self.symbol_time

    @property
    def noise_psd(self) -> float:
        _, _, b_tot = self.link.bandwidths(self.cpm)
        return self.link.noise_power_master / b_tot

    def default_downlink(self, seed: int = 0) -> DownlinkWaveform:
        power = self.link.tx_signal_power
        if self.downlink_waveform == "constant":
            return DownlinkWaveform("constant", power)
        td = self.downlink_symbol_period or self.symbol_time
        span_start = self.record_start - 2 * self.geom.tau - 2 * float(delay_grid(self.geom, self.stmm).max())
        t_start = span_start - (INTERP_TAPS + 2) * td
        n = int(math.ceil((self.record_start + self.duration_symbols * self.symbol_time - 2 * self.geom.tau
                           - t_start) / td)) + 2 * INTERP_TAPS
        return DownlinkWaveform.random_qpsk(power, td, t_start, n, seed)


@dataclass(frozen=True)
class Record:
    """Complex baseband samples at the MU combiner output."""

    samples: np.ndarray
    sample_rate: float
    t_base: float = 0.0
    symbol_time: float = math.nan
    first_symbol: int = 0
    tau: float = 0.0

    def times(self) -> np.ndarray:
        """MU time of each sample (sample centers sit half a sample off the symbol edges)."""
        return self.t_base + (np.arange(self.samples.size) + 0.5) / self.sample_rate

    def to_bytes(self) -> bytes:
        return encode_record(self.samples, self.sample_rate)


HEADER_SIZE = 64
MAGIC = b"STMMIQ01"


def encode_record(samples, sample_rate: float) -> bytes:
    """64-byte ASCII header then little-endian float64 I/Q pairs."""
    samples = np.asarray(samples, dtype=np.complex128)
    text = MAGIC + f"\nfs={float(sample_rate)!r}\nn={samples.size}\n".encode("ascii")
    if len(text) > HEADER_SIZE:
        raise ConfigError("header overflow")
    header = text.ljust(HEADER_SIZE - 1, b" ") + b"\n"
    iq = np.empty(2 * samples.size, dtype="<f8")
    iq[0::2] = samples.real
    iq[1::2] = samples.imag
    return header + iq.tobytes()


def decode_record(blob: bytes) -> tuple[np.ndarray, float]:
    header = blob[:HEADER_SIZE]
    if not header.startswith(MAGIC):
        raise ConfigError("not an IQ record")
    fields = dict(line.split("=", 1) for line in header.decode("ascii").split() if "=" in line)
    n = int(fields["n"])
    iq = np.frombuffer(blob, dtype="<f8", count=2 * n, offset=HEADER_SIZE)
    return iq[0::2] + 1j * iq[1::2], float(fields["fs"])


def _groups(geom: IncidenceGeometry, stmm: StmmConfig, mask: Optional[np.ndarray] = None):
    """Distinct delays (in first-occurrence row-major order) with multiplicities and (q, v) of a representative."""
    delays = delay_grid(geom, stmm).ravel()
    idx = np.arange(delays.size)
    if mask is not None:
        idx = idx[np.asarray(mask).ravel()]
    if idx.size == 0:
        return np.empty(0), np.empty(0), np.empty(0, dtype=int), np.empty(0, dtype=int)
    vals, first, counts = np.unique(delays[idx], return_index=True, return_counts=True)
    order = np.argsort(first, kind="stable")
    rep = idx[first[order]]
    q, v = np.divmod(rep, stmm.m_uy)
    return vals[order], counts[order].astype(float), q, v


def _gamma_terms(arch: Architecture, signal: PhaseSignal, t_pc, delays):
    """Temporal phase carried back by each atom; ``t_pc`` is phase-center time, shape (P, 1)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KnotWarning)
        if arch is Architecture.A:
            return np.broadcast_to(signal.value(t_pc), (t_pc.shape[0], delays.size))
        local = t_pc - delays[None, :]
        if arch is Architecture.B:
            return signal.value(local) + signal.derivative(local) * delays[None, :]
        return signal.value(local)


def _synthesize(scenario: WaveformScenario, signal: PhaseSignal, downlink: DownlinkWaveform,
                t_mu: np.ndarray, mask=None, include_carrier: bool = True,
                rho: Optional[complex] = None) -> np.ndarray:
    geom, stmm = scenario.geom, scenario.stmm
    delays, mult, q, v = _groups(geom, stmm, mask)
    out = np.zeros(t_mu.shape, dtype=complex)
    if delays.size == 0:
        return out
    if rho is None:
        rho = uplink_amplitude(scenario.link, geom)
    if include_carrier:
        carrier = -4 * math.pi * geom.carrier_fi * delays + spatial_phase(geom, stmm, q, v)
    else:
        carrier = np.zeros_like(delays)
    weights = mult * np.exp(1j * carrier)
    arch = scenario.phase_law_choice
    step = max(1, _CHUNK // delays.size)
    for s in range(0, t_mu.size, step):
        tt = t_mu[s:s + step, None]
        g = _gamma_terms(arch, signal, tt - geom.tau, delays)
        terms = weights[None, :] * np.exp(1j * g)
        if downlink.mode == "constant":
            out[s:s + step] = np.sum(terms, axis=1) * math.sqrt(downlink.power)
        else:
            sd = downlink.evaluate(tt - 2 * geom.tau - 2 * delays[None, :])
            out[s:s + step] = np.sum(terms * sd, axis=1)
    return rho * out


def simulate_rx(scenario: WaveformScenario, stream, seed: int = 0, *, noise: bool = False,
                downlink: Optional[DownlinkWaveform] = None, input_delay_samples: int = 0,
                atom_mask: Optional[np.ndarray] = None) -> Record:
    """Received uplink record over the scenario's symbol window.

    ``stream`` is a SymbolStream (interpreted with the scenario's CPM) or any
    phase signal. ``input_delay_samples`` delays both the metasurface phase and
    the downlink by that many samples. ``atom_mask`` restricts the sum to a
    subset of meta-atoms, shape (m_ux, m_uy).
    """
    signal = as_phase_signal(scenario.cpm, stream)
    if isinstance(stream, SymbolStream) and len(stream) < scenario.required_symbols:
        raise DomainError(f"stream has {len(stream)} symbols, scenario needs {scenario.required_symbols}")
    if downlink is None:
        downlink = scenario.default_downlink(seed)
    fs = scenario.sample_rate
    k = np.arange(scenario.n_samples)
    t_eval = scenario.record_start + (k - input_delay_samples + 0.5) / fs
    y = _synthesize(scenario, signal, downlink, t_eval, atom_mask)
    if noise:
        rng = generators(seed, 2)[1]
        sigma = math.sqrt(scenario.noise_psd * fs / 2)
        y = y + sigma * (rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size))
    return Record(y, fs, scenario.record_start, scenario.symbol_time, scenario.guard_symbols, scenario.geom.tau)


def noise_record(scenario: WaveformScenario, seed: int) -> Record:
    """Receiver noise alone (signal off)."""
    rng = generators(seed, 2)[1]
    sigma = math.sqrt(scenario.noise_psd * scenario.sample_rate / 2)
    n = scenario.n_samples
    z = sigma * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return Record(z, scenario.sample_rate, scenario.record_start, scenario.symbol_time,
                  scenario.guard_symbols, scenario.geom.tau)


def reflection_coefficients(scenario: WaveformScenario, stream, t: float) -> np.ndarray:
    """exp(j beta_{q,v}(t)) driven on every meta-atom at local time ``t``, shape (m_ux, m_uy)."""
    from .reflection import applied_phase
    signal = as_phase_signal(scenario.cpm, stream)
    q, v = np.meshgrid(np.arange(scenario.stmm.m_ux), np.arange(scenario.stmm.m_uy), indexing="ij")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", KnotWarning)
        arch = scenario.phase_law_choice
        if arch is Architecture.B:
            from .geometry import meta_atom_delay
            dt = meta_atom_delay(scenario.geom, scenario.stmm, q, v)
            beta = (spatial_phase(scenario.geom, scenario.stmm, q, v) + signal.value(np.full(q.shape, t))
                    + signal.derivative(np.full(q.shape, t)) * dt)
        else:
            beta = applied_phase(arch, scenario.geom, scenario.stmm, signal, np.full(q.shape, t), q, v)
    return np.exp(1j * beta)


def _symbol_window(record: Record, tau: float, n: int) -> np.ndarray:
    T = record.symbol_time
    t = record.times()
    lo, hi = n * T + tau, (n + 1) * T + tau
    if lo < record.t_base - 1e-15 * abs(lo) or hi > t[-1] + 1 / record.sample_rate:
        raise DomainError(f"symbol {n} lies outside the record")
    return np.nonzero((t >= lo) & (t < hi))[0]


def matched_filter_output(record: Record, s_d_reference: DownlinkWaveform, tau: float, n: int) -> complex:
    """Discrete integral of y(t) s_d*(t - 2 tau) over the n-th uplink symbol."""
    idx = _symbol_window(record, tau, n)
    t = record.times()[idx]
    ref = s_d_reference.evaluate(t - 2 * tau)
    return complex(np.sum(record.samples[idx] * np.conj(ref)) / record.sample_rate)


def matched_filter_phase(record: Record, s_d_reference: DownlinkWaveform, tau: float, n: int) -> float:
    """Phase estimate of the n-th uplink symbol."""
    return cmath.phase(matched_filter_output(record, s_d_reference, tau, n))


def _schwarz_power(record: Record, ref: DownlinkWaveform, tau: float, n: int) -> float:
    # T_u * int |y s_d*|^2 dt: the Cauchy-Schwarz form of the matched-filter signal power
    idx = _symbol_window(record, tau, n)
    t = record.times()[idx]
    prod = record.samples[idx] * np.conj(ref.evaluate(t - 2 * tau))
    return float(record.symbol_time * np.sum(np.abs(prod) ** 2) / record.sample_rate)


def envelope_gain(scenario: WaveformScenario, stream, seed: int = 0,
                  downlink: Optional[DownlinkWaveform] = None) -> float:
    """Mean received envelope power relative to a fully coherent M_u-atom reflection."""
    if downlink is None:
        downlink = scenario.default_downlink(seed)
    rec = simulate_rx(scenario, stream, seed, downlink=downlink)
    ref = downlink.evaluate(rec.times() - 2 * scenario.geom.tau)
    rho = uplink_amplitude(scenario.link, scenario.geom)
    coherent = abs(rho) ** 2 * scenario.stmm.m_u ** 2 * np.mean(np.abs(ref) ** 2)
    return float(np.mean(np.abs(rec.samples) ** 2) / coherent)


@dataclass(frozen=True)
class SnrMeasurement:
    signal: float
    isi: float
    noise: Estimate
    total: float
    useful_atoms: int
    interfering_atoms: int

    @property
    def snr(self) -> float:
        return self.signal / self.noise.value

    @property
    def sinr(self) -> float:
        return self.signal / (self.isi + self.noise.value)

    @property
    def total_snr(self) -> float:
        """Full-array matched-filter power over noise, ISI left inside the signal term."""
        return self.total / self.noise.value


def empirical_snr(scenario: WaveformScenario, stream, noise_on: bool = True, trials: int = 100,
                  seed: int = 0) -> SnrMeasurement:
    """Matched-filter signal, ISI and noise powers per uplink symbol.

    Signal and ISI come from noiseless records restricted to the useful and
    interfering meta-atoms; noise comes from ``trials`` signal-free records
    (or the analytic N0 sigma_sd^2 T_u when ``noise_on`` is false).
    """
    if noise_on and trials < 100:
        raise ConfigError("empirical noise needs at least 100 trials")
    T = scenario.symbol_time
    mask = isi_partition(scenario.geom, scenario.stmm, T)
    downlink = scenario.default_downlink(seed)
    tau = scenario.geom.tau
    symbols = range(scenario.guard_symbols, scenario.guard_symbols + scenario.duration_symbols)

    def per_symbol_power(rec):
        return float(np.mean([_schwarz_power(rec, downlink, tau, n) for n in symbols]))

    useful = simulate_rx(scenario, stream, seed, downlink=downlink, atom_mask=~mask)
    signal = per_symbol_power(useful)
    if mask.any():
        isi = per_symbol_power(simulate_rx(scenario, stream, seed, downlink=downlink, atom_mask=mask))
        total = per_symbol_power(simulate_rx(scenario, stream, seed, downlink=downlink))
    else:
        isi, total = 0.0, signal
    if noise_on:
        outs = []
        for trial in range(trials):
            rec = noise_record(scenario, seed * 1_000_003 + trial + 1)
            outs.extend(abs(matched_filter_output(rec, downlink, tau, n)) ** 2 for n in symbols)
        noise = Estimate.from_samples(outs)
    else:
        p = downlink.power
        noise = Estimate(scenario.noise_psd * p * T, 0.0, 0)
    return SnrMeasurement(signal, isi, noise, total, int((~mask).sum()), int(mask.sum()))


def _gamma_batch(cfg: CpmConfig, z: np.ndarray, t: np.ndarray) -> np.ndarray:
    """CPM phase for many streams at once: z (S, N), t (P,) -> (S, P)."""
    from .modulation import phase_pulse
    T = cfg.symbol_time_Tu
    L = cfg.memory_L
    n_sym = z.shape[1]
    k = np.floor(t / T).astype(np.int64)
    cum = np.concatenate([np.zeros((z.shape[0], 1)), np.cumsum(z, axis=1)], axis=1)
    total = 0.5 * cum[:, np.clip(k - L + 1, 0, n_sym)]
    for j in range(L):
        n = k - j
        ok = (n >= 0) & (n < n_sym)
        nn = np.clip(n, 0, n_sym - 1)
        total += np.where(ok, phase_pulse(cfg, t - n * T), 0.0)[None, :] * z[:, nn]
    return 2 * math.pi * cfg.mod_index_h * total


def _gamma_rate_batch(cfg: CpmConfig, z: np.ndarray, t: np.ndarray) -> np.ndarray:
    from .modulation import frequency_pulse
    T = cfg.symbol_time_Tu
    n_sym = z.shape[1]
    k = np.floor(t / T).astype(np.int64)
    total = np.zeros((z.shape[0], t.size))
    for j in range(cfg.memory_L):
        n = k - j
        ok = (n >= 0) & (n < n_sym)
        nn = np.clip(n, 0, n_sym - 1)
        total += np.where(ok, frequency_pulse(cfg, t - n * T), 0.0)[None, :] * z[:, nn]
    return 2 * math.pi * cfg.mod_index_h * total


def interference_statistic(geom: IncidenceGeometry, stmm: StmmConfig, cpm: CpmConfig, architecture,
                           *, n_streams: int = 1000, seed: int = 0, samples_per_symbol: int = 64,
                           mask: Optional[np.ndarray] = None, streams: Optional[np.ndarray] = None,
                           block: int = 64) -> Estimate:
    """Mean over random streams of (1/T_u) int_{T_u} |sum over atoms in ``mask`` of exp(j gamma_atom)|^2.

    ``mask`` defaults to the interfering set (delay >= T_u). Each block of
    streams draws from its own Philox generator, so the estimate does not
    depend on how blocks are scheduled.
    """
    arch = Architecture.parse(architecture)
    T = cpm.symbol_time_Tu
    if mask is None:
        mask = isi_partition(geom, stmm, T)
    delays, mult, _, _ = _groups(geom, stmm, mask)
    if delays.size == 0:
        return Estimate(0.0, 0.0, n_streams)
    n_sym_of_interest = int(math.ceil(float(delays.max()) / T)) + cpm.memory_L
    n_len = n_sym_of_interest + 1
    t = (n_sym_of_interest + (np.arange(samples_per_symbol) + 0.5) / samples_per_symbol) * T
    if arch is Architecture.A:
        local = np.broadcast_to(t[:, None], (t.size, delays.size)).ravel()
    else:
        local = (t[:, None] - delays[None, :]).ravel()
    values = []
    if streams is not None:
        batches = [np.asarray(streams, dtype=float)]
    else:
        batches = []
        sizes = [block] * (n_streams // block) + ([n_streams % block] if n_streams % block else [])
        for rng, size in zip(generators(seed, len(sizes)), sizes):
            b = rng.integers(-(cpm.alphabet_M // 2), cpm.alphabet_M // 2, size=(size, n_len))
            batches.append((2 * b + 1).astype(float))
    for z in batches:
        g = _gamma_batch(cpm, z, local)
        if arch is Architecture.B:
            g = g + _gamma_rate_batch(cpm, z, local) * np.tile(delays, t.size)[None, :]
        terms = mult[None, None, :] * np.exp(1j * g.reshape(z.shape[0], t.size, delays.size))
        values.append(np.mean(np.abs(np.sum(terms, axis=2)) ** 2, axis=1))
    return Estimate.from_samples(np.concatenate(values))
