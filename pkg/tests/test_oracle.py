import math
import time
from dataclasses import replace

import numpy as np
import pytest

from stmm.errors import ConfigError, DomainError
from stmm.geometry import Architecture, IncidenceGeometry, StmmConfig
from stmm.link import (LinkConfig, classify_regime, cutoff_kappa, isi_partition, normalized_isi, snr_uplink,
                       uplink_amplitude, _isi_scale)
from stmm.modulation import ConstantPhase, CpmConfig, LinearPhase, SymbolStream, symbol_time_for_kappa
from stmm.montecarlo import Estimate
from stmm.oracle import (HEADER_SIZE, WaveformScenario, _schwarz_power, decode_record,
                         empirical_snr, encode_record, envelope_gain, matched_filter_output, matched_filter_phase,
                         reflection_coefficients, simulate_rx)
from stmm.reflection import CouplingParams, array_factor_sq

F = 30e9


def cpm_at(kappa, h=1.0):
    return CpmConfig(h, 2, 1, symbol_time_for_kappa(h, kappa, F))


def scenario(theta, side, kappa, arch="uncompensated", duration=32, phi=0.0, **kw):
    return WaveformScenario.oversampled(IncidenceGeometry(theta, phi), StmmConfig(side, side), cpm_at(kappa),
                                        duration, phase_law_choice=arch, **kw)


def db(x):
    return 10 * math.log10(x)


def test_sample_rate_floor_is_enforced():
    sc = scenario(math.pi / 6, 16, 0.02)
    with pytest.raises(ConfigError):
        replace(sc, sample_rate=sc.sample_rate / 2)


@pytest.mark.parametrize("downlink", ["constant", "random_qpsk"])
def test_normal_incidence_constant_phase_is_coherent(downlink):
    sc = scenario(math.pi / 2, 8, 0.02, downlink_waveform=downlink)
    d = sc.default_downlink(3)
    rec = simulate_rx(sc, ConstantPhase(0.0), downlink=d)
    expected = uplink_amplitude(sc.link, sc.geom) * sc.stmm.m_u * d.evaluate(rec.times() - 2 * sc.geom.tau)
    assert np.max(np.abs(rec.samples - expected)) <= 1e-6 * np.max(np.abs(expected))


def test_linear_phase_gain_tracks_closed_form():
    geom = IncidenceGeometry(math.pi / 5, 0.3)
    stmm = StmmConfig(24, 12)
    for kappa in (0.01, 0.04, 0.08):
        sc = WaveformScenario.oversampled(geom, stmm, cpm_at(kappa), 16)
        gain = envelope_gain(sc, LinearPhase(kappa, F))
        assert db(gain) == pytest.approx(db(array_factor_sq(CouplingParams(kappa, geom, stmm))), abs=0.2)


def test_architecture_a_recovers_full_gain_with_cpm():
    sc = scenario(math.pi / 6, 40, 0.05, "A", phi=0.4)
    stream = SymbolStream.random(2, sc.required_symbols, 8)
    assert abs(db(envelope_gain(sc, stream))) < 0.1


def test_reflection_is_phase_only():
    for arch in Architecture:
        sc = scenario(math.pi / 6, 12, 0.03, arch, phi=0.2)
        stream = SymbolStream.random(2, sc.required_symbols, 2)
        for t in np.linspace(1.3, 5.7, 9) * sc.symbol_time:
            assert np.allclose(np.abs(reflection_coefficients(sc, stream, t)), 1.0, atol=1e-14)


@pytest.mark.parametrize("downlink", ["constant", "random_qpsk"])
def test_time_shift_equivariance_is_bit_exact(downlink):
    sc = scenario(math.pi / 6, 20, 0.02, "B", phi=0.5, downlink_waveform=downlink)
    stream = SymbolStream.random(2, sc.required_symbols + 2, 4)
    d = sc.default_downlink(1)
    base = simulate_rx(sc, stream, downlink=d).samples
    for m in (1, 7):
        shifted = simulate_rx(sc, stream, downlink=d, input_delay_samples=m).samples
        assert np.array_equal(shifted[m:], base[:-m])


def test_doubling_sample_rate_barely_moves_gain():
    sc = scenario(math.pi / 6, 30, 0.03, "B")
    stream = SymbolStream.random(2, sc.required_symbols, 6)
    fine = replace(sc, sample_rate=2 * sc.sample_rate)
    assert abs(db(envelope_gain(fine, stream)) - db(envelope_gain(sc, stream))) < 0.05


def test_record_bytes_round_trip():
    sc = scenario(math.pi / 4, 6, 0.02, duration=4)
    rec = simulate_rx(sc, SymbolStream.random(2, sc.required_symbols, 0), noise=True, seed=3)
    blob = rec.to_bytes()
    assert len(blob) == HEADER_SIZE + 16 * rec.samples.size
    assert blob[:8] == b"STMMIQ01" and blob[HEADER_SIZE - 1:HEADER_SIZE] == b"\n"
    samples, fs = decode_record(blob)
    assert fs == rec.sample_rate and np.array_equal(samples, rec.samples)
    first = np.frombuffer(blob[HEADER_SIZE:HEADER_SIZE + 16], dtype="<f8")
    assert first[0] == rec.samples[0].real and first[1] == rec.samples[0].imag
    with pytest.raises(ConfigError):
        decode_record(b"x" * 80)
    assert encode_record([1 + 2j], 1.0)[HEADER_SIZE:] == np.array([1.0, 2.0], dtype="<f8").tobytes()


def test_matched_filter_window_must_lie_in_record():
    sc = scenario(math.pi / 4, 6, 0.02, duration=4)
    rec = simulate_rx(sc, SymbolStream.random(2, sc.required_symbols, 0))
    with pytest.raises(DomainError):
        matched_filter_phase(rec, sc.default_downlink(), sc.geom.tau, sc.guard_symbols + 4)
    with pytest.raises(DomainError):
        matched_filter_phase(rec, sc.default_downlink(), sc.geom.tau, sc.guard_symbols - 1)


def test_matched_filter_recovers_phase_state_in_narrowband():
    sc = scenario(math.pi / 2, 8, 0.02, duration=6)
    rec = simulate_rx(sc, ConstantPhase(0.7))
    for n in range(sc.guard_symbols, sc.guard_symbols + 6):
        assert matched_filter_phase(rec, sc.default_downlink(), sc.geom.tau, n) == pytest.approx(0.7, abs=1e-3)
    # a constant +1 symbol advances the phase by pi over the symbol; the filter reports its midpoint
    stream = SymbolStream.constant(1, sc.required_symbols)
    rec = simulate_rx(sc, stream)
    n = sc.guard_symbols + 2
    mid = math.pi * (n + 0.5)
    est = matched_filter_phase(rec, sc.default_downlink(), sc.geom.tau, n)
    assert math.remainder(est - mid, 2 * math.pi) == pytest.approx(0.0, abs=1e-3)


def test_isi_distortion_grows_with_interfering_set():
    # relative matched-filter error caused by atoms whose delay exceeds one symbol
    distortion = []
    geom = IncidenceGeometry(math.pi / 6)
    cpm = cpm_at(0.04)
    for side in (60, 90, 120, 150):
        stmm = StmmConfig(side, 1)
        sc = WaveformScenario.oversampled(geom, stmm, cpm, 48, phase_law_choice="B")
        mask = isi_partition(geom, stmm, cpm.symbol_time_Tu)
        stream = SymbolStream.random(2, sc.required_symbols, 5)
        d = sc.default_downlink()
        full = simulate_rx(sc, stream, downlink=d)
        clean = simulate_rx(sc, stream, downlink=d, atom_mask=~mask)
        symbols = range(sc.guard_symbols, sc.guard_symbols + 48)
        a = np.array([matched_filter_output(full, d, geom.tau, n) for n in symbols])
        b = np.array([matched_filter_output(clean, d, geom.tau, n) for n in symbols])
        distortion.append(float(np.mean(np.abs(a - b) ** 2) / np.mean(np.abs(b) ** 2)))
    assert all(y > x for x, y in zip(distortion, distortion[1:]))


def test_phase_noise_variance_at_high_snr():
    geom = IncidenceGeometry(math.pi / 2)
    stmm = StmmConfig(4, 4)
    cpm = cpm_at(0.02)
    link = LinkConfig(4, 4)
    target = 100.0
    base = snr_uplink(link, geom, stmm, cpm, 1.0).snr
    link = replace(link, tx_signal_power=target / base)
    sc = WaveformScenario.oversampled(geom, stmm, cpm, 400, link=link)
    snr = snr_uplink(link, geom, stmm, cpm, 1.0).snr
    rec = simulate_rx(sc, ConstantPhase(0.0), noise=True, seed=12)
    d = sc.default_downlink()
    phases = [matched_filter_phase(rec, d, geom.tau, n) for n in range(sc.guard_symbols, sc.guard_symbols + 400)]
    var = float(np.var(phases))
    assert var == pytest.approx(1 / (2 * snr), rel=0.2)


def test_empirical_snr_narrowband():
    geom = IncidenceGeometry(math.pi / 3)
    stmm = StmmConfig(16, 16)
    delay = 16 * (geom.wavelength_lambda_i / 4) * math.cos(geom.theta) / 299792458.0
    cpm = CpmConfig(1.0, 2, 1, 60 * delay)
    sc = WaveformScenario.oversampled(geom, stmm, cpm, 16)
    assert classify_regime(geom, stmm, cpm).regime.value == "narrowband"
    meas = empirical_snr(sc, SymbolStream.random(2, sc.required_symbols, 1), trials=100, seed=2)
    closed = snr_uplink(sc.link, geom, stmm, cpm, 1.0).snr
    assert abs(db(meas.snr) - db(closed)) < 0.3


def test_empirical_snr_wideband_without_isi():
    geom = IncidenceGeometry(math.pi / 6)
    stmm = StmmConfig(40, 40)
    kappa = 0.75 * cutoff_kappa(1.0, 40, geom.theta)
    cpm = cpm_at(kappa)
    sc = WaveformScenario.oversampled(geom, stmm, cpm, 16)
    meas = empirical_snr(sc, LinearPhase(kappa, F), trials=100, seed=3)
    closed = snr_uplink(sc.link, geom, stmm, cpm, array_factor_sq(CouplingParams(kappa, geom, stmm))).snr
    assert abs(db(meas.snr) - db(closed)) < 0.3


def test_isi_gap_matches_interference_estimate():
    geom = IncidenceGeometry(math.pi / 6)
    stmm = StmmConfig(100, 1)
    cpm = cpm_at(0.035)
    sc = WaveformScenario.oversampled(geom, stmm, cpm, 32, phase_law_choice="B")
    mask = isi_partition(geom, stmm, cpm.symbol_time_Tu)
    d = sc.default_downlink()
    samples = []
    for seed in range(6):
        stream = SymbolStream.random(2, sc.required_symbols, 100 + seed)
        rec = simulate_rx(sc, stream, downlink=d, atom_mask=mask)
        samples += [_schwarz_power(rec, d, geom.tau, n) for n in range(sc.guard_symbols, sc.guard_symbols + 32)]
    measured = Estimate.from_samples(np.array(samples) / _isi_scale(sc.link, geom, cpm))
    predicted = normalized_isi(geom, stmm, cpm, Architecture.B, 1000, 0)
    assert abs(measured.value - predicted.value) <= measured.ci_halfwidth + predicted.ci_halfwidth
    meas = empirical_snr(sc, SymbolStream.random(2, sc.required_symbols, 100), trials=100)
    no_isi = snr_uplink(sc.link, geom, stmm, cpm, 1.0).snr
    assert meas.sinr < no_isi


def test_performance_contract_full_aperture():
    geom = IncidenceGeometry(math.pi / 6, math.pi / 7)
    sc = WaveformScenario.oversampled(geom, StmmConfig(100, 100), cpm_at(0.01), 256, phase_law_choice="B")
    assert sc.samples_per_symbol >= 16
    stream = SymbolStream.random(2, sc.required_symbols, 0)
    start = time.perf_counter()
    rec = simulate_rx(sc, stream)
    assert time.perf_counter() - start < 60
    assert rec.samples.size == sc.n_samples
