"""Figure presets: each returns ``{file name: CSV text}`` for one figure's curves.

Shared operating point: 30 GHz carrier, D = 100 m, 32 receive elements at the
slave, rectangular binary CPM with L = 1 and h = 1, mu = 0.5, and a transmit
power giving a SISO SNR of -30 dB at 100 m (it scales as 1/D^2 elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Callable

import numpy as np

from .capacity import efficiency_at_split, optimal_mu, spectral_efficiency
from .config import Scenario
from .csi import (CsiErrorModel, crlb_sigma_theta, crossover_snr_db, csi_loss_factor, ook_baseline_se)
from .geometry import Architecture, IncidenceGeometry, StmmConfig
from .link import LinkConfig, classify_regime, coupling_af_sq, cutoff_kappa, siso_snr, snr_downlink, snr_uplink
from .modulation import CpmConfig, symbol_time_for_kappa
from .reflection import EVANESCENT, CouplingParams, array_factor_1d, array_factor_sq, squint_angle
from .sweep import to_db, uplink_snr, write_csv

CARRIER = 30e9
REFERENCE_DISTANCE = 100.0
REFERENCE_SISO_SNR_DB = -30.0
N_SMALL, N_LARGE = 64, 512
PRESET_NAMES = ("fig5", "fig6", "fig7", "fig8a", "fig8b", "fig9a", "fig9b", "fig10")


def base_scenario(theta_deg: float = 30.0, side: int = 100, n_master: int = N_LARGE,
                  distance: float = REFERENCE_DISTANCE, architecture=Architecture.A,
                  kappa: float = 0.01) -> Scenario:
    ref = IncidenceGeometry(math.radians(theta_deg), 0.0, REFERENCE_DISTANCE, CARRIER)
    link = LinkConfig(n_master=n_master, m_d_slave=32).with_siso_snr(ref, 10 ** (REFERENCE_SISO_SNR_DB / 10))
    geom = replace(ref, distance_D=distance)
    cpm = CpmConfig(1.0, 2, 1, symbol_time_for_kappa(1.0, kappa, CARRIER))
    return Scenario(geom, StmmConfig(side, side, architecture=architecture), cpm, link)


def at_kappa(scn: Scenario, kappa: float) -> Scenario:
    return replace(scn, cpm=replace(scn.cpm, symbol_time_Tu=symbol_time_for_kappa(1.0, kappa, CARRIER)))


def at_arch(scn: Scenario, arch) -> Scenario:
    return replace(scn, stmm=replace(scn.stmm, architecture=Architecture.parse(arch)))


def at_siso_snr_db(scn: Scenario, snr_db: float) -> Scenario:
    return replace(scn, link=scn.link.with_siso_snr(scn.geometry, 10 ** (snr_db / 10)))


def eta_u(scn: Scenario, seed: int = 0) -> float:
    return scn.link.mu_split * math.log2(1 + uplink_snr(scn, seed))


def fig5(seed: int = 0) -> dict:
    """Coupling loss vs kappa: planar closed form, half-wave linear reading, compensated."""
    out = {}
    kappas = np.linspace(0.0, 0.06, 241)
    for theta_deg in (90, 30):
        for side in (100, 200):
            geom = IncidenceGeometry(math.radians(theta_deg), 0.0, REFERENCE_DISTANCE, CARRIER)
            stmm = StmmConfig(side, side)
            rows = []
            for k in kappas:
                k = float(k)
                planar = array_factor_sq(CouplingParams(k, geom, stmm))
                linear = array_factor_1d(geom.theta, k, side)
                rows.append([k, to_db(planar), to_db(linear), 0.0])
            out[f"fig5_theta{theta_deg}_M{side}.csv"] = write_csv(
                ["kappa", "af_sq_db_planar", "af_sq_db_linear_half_wave", "af_sq_db_compensated"], rows)
    return out


def _squint_deg(theta, kappa):
    ang = squint_angle(theta, kappa)
    return "evanescent" if ang is EVANESCENT else math.degrees(ang)


def fig6(seed: int = 0) -> dict:
    """Direction of maximum reflection vs kappa; per-angle curves and a full (theta, kappa) grid."""
    thetas = (10, 30, 45, 60, 90)
    kappas = np.linspace(0.0, 0.5, 101)
    rows = [[float(k)] + [_squint_deg(math.radians(t), float(k)) for t in thetas] for k in kappas]
    curves = write_csv(["kappa"] + [f"squint_deg_theta{t}" for t in thetas], rows)
    grid = []
    for t in range(1, 91):
        for k in np.linspace(0.0, 0.5, 51):
            grid.append([float(t), float(k), _squint_deg(math.radians(t), float(k))])
    return {"fig6_squint_vs_kappa.csv": curves,
            "fig6_squint_grid.csv": write_csv(["theta_deg", "kappa", "squint_deg"], grid)}


def _design_row(scn: Scenario) -> list:
    se = spectral_efficiency(snr_downlink(scn.link, scn.geometry), uplink_snr(scn), scn.link.mu_split)
    return [se.eta_d, se.eta_u, se.eta_total]


def fig7(seed: int = 0) -> dict:
    """Full-gain efficiency vs SISO SNR, distance and metasurface side."""
    out = {}
    header = ["eta_d", "eta_u", "eta_total"]
    for n in (N_SMALL, N_LARGE):
        for side in (100, 200):
            base = base_scenario(side=side, n_master=n)
            rows = [[float(s)] + _design_row(at_siso_snr_db(base, float(s))) for s in np.linspace(-40, 10, 51)]
            out[f"fig7a_N{n}_M{side}.csv"] = write_csv(["siso_snr_db"] + header, rows)
            rows = [[float(d)] + _design_row(base_scenario(side=side, n_master=n, distance=float(d)))
                    for d in np.geomspace(10, 1000, 41)]
            out[f"fig7b_N{n}_M{side}.csv"] = write_csv(["distance_m"] + header, rows)
        for dist in (50.0, 100.0):
            rows = [[side] + _design_row(base_scenario(side=side, n_master=n, distance=dist))
                    for side in range(10, 301, 10)]
            out[f"fig7c_N{n}_D{int(dist)}.csv"] = write_csv(["stmm_side"] + header, rows)
    return out


def _fig8(side: int, seed: int) -> dict:
    out = {}
    kappas = np.linspace(0.0005, 0.05, 100)
    for theta_deg in (30, 60):
        rows = []
        for k in kappas:
            scn = at_kappa(base_scenario(theta_deg, side), float(k))
            etas = [eta_u(at_arch(scn, a), seed) for a in (Architecture.A, Architecture.B, Architecture.UNCOMPENSATED)]
            regime = classify_regime(scn.geometry, scn.stmm, scn.cpm).regime.value
            rows.append([float(k)] + etas + [regime])
        name = f"fig8{'a' if side == 100 else 'b'}_theta{theta_deg}.csv"
        out[name] = write_csv(["kappa", "eta_u_arch_a", "eta_u_arch_b", "eta_u_uncompensated", "regime"], rows)
        kbar = cutoff_kappa(1.0, side, math.radians(theta_deg))
        out[name.replace(".csv", "_cutoff.csv")] = write_csv(["cutoff_kappa"], [[kbar]])
    return out


def fig8a(seed: int = 0) -> dict:
    """Uplink efficiency vs kappa for the three architectures, 100 x 100 atoms."""
    return _fig8(100, seed)


def fig8b(seed: int = 0) -> dict:
    """Uplink efficiency vs kappa for the three architectures, 200 x 200 atoms."""
    return _fig8(200, seed)


CSI_SAMPLES = 100_000


def _fig9(side: int, kappa: float, seed: int) -> dict:
    base = at_kappa(base_scenario(30.0, side, N_SMALL), kappa)
    geom, stmm, mu = base.geometry, base.stmm, base.link.mu_split
    unc_af = coupling_af_sq(Architecture.UNCOMPENSATED, geom, stmm, base.cpm)

    def curves(snr_db):
        scn = at_siso_snr_db(base, snr_db)
        full = snr_uplink(scn.link, geom, stmm, scn.cpm, 1.0).snr
        sigma = crlb_sigma_theta(geom.theta, siso_snr(scn.link, geom), scn.link.n_master, scn.link.m_d_slave)
        err = CsiErrorModel(sigma * sigma, mc_samples=CSI_SAMPLES, seed=seed)
        loss = csi_loss_factor(geom, stmm, kappa, err).value
        pointing = csi_loss_factor(geom, stmm, 0.0, err).value
        blue = mu * math.log2(1 + full)
        yellow = eta_u(at_arch(scn, Architecture.UNCOMPENSATED), seed)
        red = mu * math.log2(1 + full * loss)
        green = ook_baseline_se(full, unc_af, pointing, mu)
        return [blue, yellow, red, green, math.degrees(sigma)]

    grid = np.linspace(-40, 10, 51)
    rows = [[float(s)] + curves(float(s)) for s in grid]
    tag = "a" if side == 100 else "b"
    out = {f"fig9{tag}.csv": write_csv(
        ["siso_snr_db", "eta_u_compensated_perfect_csi", "eta_u_uncompensated_perfect_csi",
         "eta_u_compensated_csi_error", "eta_u_ook_csi_error", "sigma_theta_deg"], rows)}
    # red - yellow changes sign where CSI errors stop dominating
    def gap(snr_db):
        c = curves(snr_db)
        return c[2] - c[1]

    cross = crossover_snr_db(gap, 0.0, float(grid[0]), float(grid[-1]))
    out[f"fig9{tag}_threshold.csv"] = write_csv(["threshold_siso_snr_db"], [[cross if cross is not None else "none"]])
    return out


def fig9a(seed: int = 0) -> dict:
    """Uplink efficiency vs SISO SNR under CRLB-limited elevation errors, 100 x 100 atoms, kappa = 1%."""
    return _fig9(100, 0.01, seed)


def fig9b(seed: int = 0) -> dict:
    """Same as fig9a for 200 x 200 atoms at kappa = 2%."""
    return _fig9(200, 0.02, seed)


def fig10(seed: int = 0) -> dict:
    """Total efficiency vs the uplink bandwidth share, with the optimal split."""
    out = {}
    mus = np.linspace(0.005, 0.995, 199)
    summary = []
    for side in (100, 200):
        for dist in (50.0, 100.0):
            scn = base_scenario(side=side, n_master=N_LARGE, distance=dist)
            snr_d = snr_downlink(scn.link, scn.geometry)
            tilde = snr_uplink(scn.link, scn.geometry, scn.stmm, scn.cpm, 1.0).tilde
            rows = []
            for m in mus:
                m = float(m)
                se = spectral_efficiency(snr_d, tilde / m, m)
                rows.append([m, se.eta_d, se.eta_u, se.eta_total])
            out[f"fig10_M{side}_D{int(dist)}.csv"] = write_csv(["mu", "eta_d", "eta_u", "eta_total"], rows)
            best = optimal_mu(snr_d, tilde)
            summary.append([side, dist, best.mu, float(efficiency_at_split(snr_d, tilde, best.mu)), best.boundary])
    out["fig10_optimum.csv"] = write_csv(["stmm_side", "distance_m", "mu_opt", "eta_opt", "boundary"], summary)
    return out


PRESETS: dict[str, Callable[[int], dict]] = {
    "fig5": fig5, "fig6": fig6, "fig7": fig7, "fig8a": fig8a, "fig8b": fig8b,
    "fig9a": fig9a, "fig9b": fig9b, "fig10": fig10,
}


PLOT_SCRIPT = '''"""Plot every CSV in this directory: first column on x, the others as curves."""
import csv
import glob
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if len(body) < 2:
        continue
    fig, ax = plt.subplots()
    x = [float(r[0]) for r in body]
    for j, name in enumerate(header[1:], start=1):
        try:
            y = [float(r[j]) for r in body]
        except ValueError:
            continue
        ax.plot(x, y, label=name)
    ax.set_xlabel(header[0])
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)
'''


def run_preset(name: str, seed: int = 0) -> dict:
    """CSV files for a named figure plus the plotting helper."""
    files = dict(PRESETS[name](seed))
    files["plot.py"] = PLOT_SCRIPT
    return files
