import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stmm.errors import ConfigError, DomainError
from stmm.modulation import (CpmConfig, KnotWarning, Psf, SymbolStream, frequency_pulse, gamma, gamma_derivative,
                             kappa_of, occupied_bandwidth, phase_pulse, symbol_time_for_kappa)

T = 1e-9


@pytest.mark.parametrize("psf", list(Psf))
@pytest.mark.parametrize("L", [1, 2, 3])
def test_phase_pulse_endpoints(psf, L):
    cfg = CpmConfig(1.0, 2, L, T, psf, psf_energy_factor_g=1.0)
    assert phase_pulse(cfg, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert phase_pulse(cfg, L * T) == 0.5
    assert phase_pulse(cfg, 5 * L * T) == 0.5
    assert phase_pulse(cfg, -T) == 0.0


@pytest.mark.parametrize("psf", list(Psf))
def test_frequency_pulse_integrates_to_half(psf):
    cfg = CpmConfig(1.0, 2, 2, T, psf, psf_energy_factor_g=1.0)
    t = (np.arange(200_000) + 0.5) / 200_000 * 2 * T
    area = np.sum(frequency_pulse(cfg, t)) * (2 * T / 200_000)
    assert area == pytest.approx(0.5, rel=1e-6)


def test_rectangular_cpfsk_phase_at_symbol_edges():
    cfg = CpmConfig(1.0, 2, 1, T)
    z = (1, -1, -1, 1, 1, 1)
    s = SymbolStream(z)
    edges = np.arange(len(z) + 1) * T
    expected = math.pi * np.concatenate([[0], np.cumsum(z)])
    assert np.allclose(gamma(cfg, s, edges), expected, atol=1e-12)
    # linear inside a symbol
    assert gamma(cfg, s, 0.25 * T) == pytest.approx(math.pi * 0.25)


def test_gamma_outside_support():
    cfg = CpmConfig(symbol_time_Tu=T)
    with pytest.raises(DomainError):
        gamma(cfg, SymbolStream((1, 1)), 2.5 * T)


def test_derivative_matches_finite_difference():
    cfg = CpmConfig(0.7, 4, 2, T, Psf.RAISED_COSINE)
    s = SymbolStream.random(4, 20, seed=3)
    t = np.linspace(2.1, 17.9, 37) * T
    eps = 1e-6 * T
    numeric = (gamma(cfg, s, t + eps) - gamma(cfg, s, t - eps)) / (2 * eps)
    assert np.allclose(gamma_derivative(cfg, s, t), numeric, rtol=1e-6)


def test_knot_warning_for_rectangular_pulse():
    cfg = CpmConfig(symbol_time_Tu=T)
    with pytest.warns(KnotWarning):
        gamma_derivative(cfg, SymbolStream((1, -1, 1)), T)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gamma_derivative(CpmConfig(symbol_time_Tu=T, psf="rc"), SymbolStream((1, -1, 1)), T)


def test_bandwidth_specialization_over_grid():
    for h in (0.25, 0.5, 1.0, 1.7):
        for L in (1, 2, 3, 4):
            for Tu in (1e-9, 3.3e-8):
                cfg = CpmConfig(h, 2, L, Tu, psf_energy_factor_g=1.0)
                assert occupied_bandwidth(cfg).b_u == pytest.approx((h * math.sqrt(L) + 1) / (L * Tu), rel=1e-12)


def test_gaussian_needs_explicit_energy_factor():
    with pytest.raises(ConfigError):
        occupied_bandwidth(CpmConfig(psf="gaussian"))
    assert occupied_bandwidth(CpmConfig(psf="gaussian", psf_energy_factor_g=1.2)).b_u > 0


def test_kappa_round_trip():
    T_u = symbol_time_for_kappa(1.0, 0.02, 30e9)
    assert kappa_of(CpmConfig(1.0, 2, 1, T_u), 30e9) == pytest.approx(0.02, rel=1e-15)


@pytest.mark.parametrize("kwargs", [dict(alphabet_M=3), dict(memory_L=0), dict(symbol_time_Tu=0.0),
                                    dict(mod_index_h=-1.0), dict(psf="triangle")])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        CpmConfig(**kwargs)


def test_symbol_streams():
    with pytest.raises(ConfigError):
        SymbolStream((1, 2))
    with pytest.raises(ConfigError):
        SymbolStream((1, 5)).validate(4)
    a = SymbolStream.random(8, 100, seed=11)
    assert a == SymbolStream.random(8, 100, seed=11)
    assert set(a.symbols) <= {-7, -5, -3, -1, 1, 3, 5, 7}
    assert SymbolStream.from_text(a.to_text()).symbols == a.symbols


@settings(max_examples=60, deadline=None)
@given(h=st.floats(0.1, 2.0), M=st.sampled_from([2, 4, 8]), L=st.integers(1, 3),
       psf=st.sampled_from(list(Psf)), seed=st.integers(0, 2 ** 32))
def test_phase_increment_per_symbol(h, M, L, psf, seed):
    """Once a symbol's pulse has settled, it has contributed pi h z_n to the phase."""
    cfg = CpmConfig(h, M, L, T, psf, psf_energy_factor_g=1.0)
    s = SymbolStream.random(M, 12, seed)
    n = 12 - L
    k = 4
    # phase at the end of symbol n+L-1 minus phase at end of symbol k+L-1 counts only settled symbols
    diff = gamma(cfg, s, (n + L - 1) * T + T) - gamma(cfg, s, (k + L - 1) * T + T)
    settled = math.pi * h * sum(s.symbols[k + 1:n + 1])
    partial_now = 2 * math.pi * h * sum(s.symbols[j] * float(phase_pulse(cfg, (n + L) * T - j * T))
                                        for j in range(n + 1, 12))
    partial_then = 2 * math.pi * h * sum(s.symbols[j] * float(phase_pulse(cfg, (k + L) * T - j * T))
                                         for j in range(k + 1, 12))
    assert diff == pytest.approx(settled + partial_now - partial_then, abs=1e-9)
