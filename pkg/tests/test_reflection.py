import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stmm.errors import ConfigError, KnotSamplingError
from stmm.geometry import Architecture, IncidenceGeometry, StmmConfig, meta_atom_delay
from stmm.modulation import CpmConfig, CpmSignal, LinearPhase, SymbolStream
from stmm.reflection import (EVANESCENT, CouplingParams, applied_phase, array_factor_1d, array_factor_2d,
                             array_factor_sq, coupling_channel_gain, dirichlet_ratio, phase_law,
                             squint_angle)

# 40-digit mpmath direct sums of the normalized phasor sum
PLANAR_DB_M100 = -2.8665187127006402421
PLANAR_DB_M200 = -16.46788019093211795
HALF_WAVE_DB_M100 = -16.467076482131391754
HALF_WAVE_DB_M200 = -17.260285188567231512
PLANAR_16X8_THETA45_PHI30_K5 = 0.9479525203268478196779698
SQUINT_DEG_THETA30_K10 = 17.70631905552978410454683


def db(x):
    return 10 * math.log10(x)


@pytest.mark.parametrize("side,expected", [(100, PLANAR_DB_M100), (200, PLANAR_DB_M200)])
def test_planar_gain_matches_direct_sum(side, expected):
    p = CouplingParams(0.02, IncidenceGeometry(math.pi / 6), StmmConfig(side, side))
    assert db(array_factor_sq(p)) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("side,expected", [(100, HALF_WAVE_DB_M100), (200, HALF_WAVE_DB_M200)])
def test_half_wave_gain_matches_direct_sum(side, expected):
    assert db(array_factor_1d(math.pi / 6, 0.02, side)) == pytest.approx(expected, abs=1e-9)


def test_planar_with_azimuth():
    p = CouplingParams(0.05, IncidenceGeometry(math.pi / 4, math.pi / 6), StmmConfig(16, 8))
    assert array_factor_sq(p) == pytest.approx(PLANAR_16X8_THETA45_PHI30_K5, rel=1e-12)


def test_quarter_wave_linear_equals_planar_single_row():
    geom = IncidenceGeometry(0.6)
    p = CouplingParams(0.03, geom, StmmConfig(50, 1))
    assert array_factor_1d(geom.theta, 0.03, 50, spacing_wavelengths=0.25) == pytest.approx(array_factor_sq(p), rel=1e-12)


def test_no_loss_at_normal_incidence_or_zero_shift():
    assert array_factor_sq(CouplingParams(0.05, IncidenceGeometry(math.pi / 2), StmmConfig())) == 1.0
    assert array_factor_sq(CouplingParams(0.0, IncidenceGeometry(0.3), StmmConfig())) == 1.0


def test_dirichlet_removable_singularity():
    m = 7
    for k in (0, 1, 2):
        x = k * math.pi + 1e-10
        assert dirichlet_ratio(x, m) == pytest.approx((-1) ** (k * (m - 1)) * m, rel=1e-12)
    xs = np.array([0.3, 1.2])
    assert np.allclose(dirichlet_ratio(xs, m), np.sin(m * xs) / np.sin(xs))


def test_kappa_domain():
    with pytest.raises(ConfigError):
        CouplingParams(1.0, IncidenceGeometry(0.5), StmmConfig())


def test_squint():
    assert math.degrees(squint_angle(math.pi / 6, 0.1)) == pytest.approx(SQUINT_DEG_THETA30_K10, rel=1e-12)
    assert squint_angle(math.pi / 2, 0.3) == pytest.approx(math.pi / 2)
    assert squint_angle(0.05, 0.2) is EVANESCENT
    assert squint_angle(math.pi / 6, 0.0) == pytest.approx(math.pi / 6)


def test_linear_phase_channel_gain_equals_closed_form():
    geom = IncidenceGeometry(math.pi / 5, 0.4)
    stmm = StmmConfig(12, 9)
    kappa = 0.08
    h = coupling_channel_gain(geom, stmm, LinearPhase(kappa, geom.carrier_fi), 3e-9)
    af = array_factor_2d(CouplingParams(kappa, geom, stmm))
    assert abs(h) ** 2 / stmm.m_u ** 2 == pytest.approx(abs(af) ** 2, rel=1e-9)


def test_architecture_a_compensates_linear_phase_exactly():
    geom = IncidenceGeometry(math.pi / 6)
    stmm = StmmConfig(30, 30)
    for arch in (Architecture.A, Architecture.B):
        h = coupling_channel_gain(geom, stmm, LinearPhase(0.05, geom.carrier_fi), 1e-9, arch)
        assert abs(h) == pytest.approx(stmm.m_u, rel=1e-9)


def test_phase_law_semantics():
    geom = IncidenceGeometry(math.pi / 4)
    stmm = StmmConfig(4, 4)
    g = LinearPhase(0.01, geom.carrier_fi, 0.2)
    dt = meta_atom_delay(geom, stmm, 3, 2)
    t = 2e-9
    assert phase_law("A", geom, stmm, g, t, 3, 2) == pytest.approx(
        applied_phase("uncompensated", geom, stmm, g, t + dt, 3, 2))
    # for linear phase the first-order correction is exact
    assert phase_law("B", geom, stmm, g, t, 3, 2) == pytest.approx(phase_law("A", geom, stmm, g, t, 3, 2), rel=1e-12)
    assert phase_law("uncompensated", geom, stmm, g, t, 3, 2) == pytest.approx(
        applied_phase("uncompensated", geom, stmm, g, t - dt, 3, 2))


def test_architecture_b_refuses_pulse_edges():
    cfg = CpmConfig(symbol_time_Tu=1e-9)
    sig = CpmSignal(cfg, SymbolStream((1, -1, 1, 1)))
    geom = IncidenceGeometry(math.pi / 4)
    with pytest.raises(KnotSamplingError):
        applied_phase("B", geom, StmmConfig(4, 4), sig, 2e-9, 1, 1)
    applied_phase("B", geom, StmmConfig(4, 4), sig, 2.5e-9, 1, 1)


@settings(max_examples=150, deadline=None)
@given(theta=st.floats(0.05, math.pi / 2), kappa=st.floats(-0.2, 0.2), mx=st.integers(1, 64),
       my=st.integers(1, 64), phi=st.floats(0, 2 * math.pi))
def test_gain_is_bounded(theta, kappa, mx, my, phi):
    g = array_factor_sq(CouplingParams(kappa, IncidenceGeometry(theta, phi), StmmConfig(mx, my)))
    assert 0.0 <= g <= 1.0


@settings(max_examples=100, deadline=None)
@given(theta=st.floats(0.05, 1.5), kappa=st.floats(1e-4, 0.1), m=st.integers(2, 80))
def test_gain_even_in_kappa(theta, kappa, m):
    geom = IncidenceGeometry(theta)
    a = array_factor_sq(CouplingParams(kappa, geom, StmmConfig(m, 1)))
    b = array_factor_sq(CouplingParams(-kappa, geom, StmmConfig(m, 1)))
    assert a == pytest.approx(b, rel=1e-9, abs=1e-15)
