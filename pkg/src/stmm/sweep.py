"""Parameter sweeps over a scenario and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import math
from typing import Iterable, Optional, Sequence

from .capacity import spectral_efficiency
from .config import Scenario, SweepSpec, with_parameter
from .csi import CsiErrorModel, crlb_sigma_theta, csi_loss_factor
from .errors import UsageError
from .link import classify_regime, coupling_af_sq, siso_snr, snr_downlink
from .modulation import kappa_of
from .montecarlo import ordered_map
from .reflection import EVANESCENT, squint_angle

ISI_STREAMS = 1000


def to_db(x: float) -> float:
    return 10 * math.log10(x) if x > 0 else -math.inf


def format_value(x) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def point_kappa(scn: Scenario) -> float:
    return kappa_of(scn.cpm, scn.geometry.carrier_fi)


def sigma_theta_of(scn: Scenario) -> float:
    if scn.csi.sigma_theta is not None:
        return scn.csi.sigma_theta
    return crlb_sigma_theta(scn.geometry.theta, siso_snr(scn.link, scn.geometry), scn.link.n_master,
                            scn.link.m_d_slave)


def uplink_snr(scn: Scenario, seed: int = 0, isi_streams: int = ISI_STREAMS) -> float:
    """Matched-filter SNR (or SINR in the ISI regime) for the scenario's architecture."""
    rep = classify_regime(scn.geometry, scn.stmm, scn.cpm, scn.link, scn.stmm.architecture,
                          isi_streams=isi_streams, seed=seed)
    return rep.snr_or_sinr


def evaluate_point(scn: Scenario, outputs: Sequence[str], seed: int = 0,
                   exact_phase: Optional[bool] = None, isi_streams: int = ISI_STREAMS) -> dict:
    """Observables at one operating point, keyed by column name."""
    out = {}
    kappa = point_kappa(scn)
    geom = scn.geometry
    exact = scn.csi.exact_phase if exact_phase is None else exact_phase
    if "af_sq_db" in outputs:
        out["af_sq_db"] = to_db(coupling_af_sq(scn.stmm.architecture, geom, scn.stmm, scn.cpm))
    if "squint_deg" in outputs:
        ang = squint_angle(geom.theta, kappa)
        out["squint_deg"] = "evanescent" if ang is EVANESCENT else math.degrees(ang)
    if {"eta_d", "eta_u", "eta_total", "regime"} & set(outputs):
        rep = classify_regime(geom, scn.stmm, scn.cpm, scn.link, scn.stmm.architecture,
                              isi_streams=isi_streams, seed=seed)
        se = spectral_efficiency(snr_downlink(scn.link, geom), rep.snr_or_sinr, scn.link.mu_split)
        for name in ("eta_d", "eta_u", "eta_total"):
            if name in outputs:
                out[name] = getattr(se, name)
        if "regime" in outputs:
            out["regime"] = rep.regime.value
    if "sigma_theta_deg" in outputs:
        out["sigma_theta_deg"] = math.degrees(sigma_theta_of(scn))
    if "csi_loss" in outputs:
        s = sigma_theta_of(scn)
        loss = csi_loss_factor(geom, scn.stmm, kappa, CsiErrorModel(s * s, mc_samples=scn.csi.mc_samples, seed=seed),
                               exact_phase=exact)
        out["csi_loss"] = loss.value
        out["csi_loss_ci_halfwidth"] = loss.estimate.ci_halfwidth
    return out


def columns(spec: SweepSpec) -> list[str]:
    cols = [spec.parameter]
    for name in spec.outputs:
        cols.append(name)
        if name == "csi_loss":
            cols.append("csi_loss_ci_halfwidth")
    return cols


def run_sweep(scn: Scenario, seed: int = 0, threads: int = 1, exact_phase: Optional[bool] = None,
              spec: Optional[SweepSpec] = None) -> str:
    """CSV text with one row per grid point, in grid order."""
    spec = spec or scn.sweep
    if spec is None:
        raise UsageError("scenario has no [sweep] section")
    grid = spec.grid()

    def one(value):
        point = with_parameter(scn, spec.parameter, value)
        vals = evaluate_point(point, spec.outputs, seed, exact_phase)
        return [value] + [vals[c] for c in columns(spec)[1:]]

    return write_csv(columns(spec), ordered_map(one, grid, threads))
