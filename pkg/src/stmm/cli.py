"""Command-line entry point: ``stmm preset|sweep|validate|oracle``.

Exit codes: 0 success, 2 usage error, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from .config import parse_scenario, serialize_scenario
from .errors import ConfigError, DomainError, UsageError
from .presets import PRESET_NAMES, PLOT_SCRIPT, run_preset
from .sweep import run_sweep, write_csv

EXIT_OK, EXIT_USAGE, EXIT_CONFIG = 0, 2, 3


def _write_files(out_dir: str, files: dict) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _cmd_preset(args) -> int:
    _write_files(args.out, run_preset(args.name, args.seed))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scn = parse_scenario(_read(args.config))
    exact = True if args.exact_phase else None
    text = run_sweep(scn, args.seed, args.threads, exact)
    stem = os.path.splitext(os.path.basename(args.config))[0]
    _write_files(args.out, {f"{stem}.csv": text, "plot.py": PLOT_SCRIPT})
    return EXIT_OK


def _cmd_validate(args) -> int:
    scn = parse_scenario(_read(args.config))
    sys.stdout.write(serialize_scenario(scn))
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .modulation import SymbolStream
    from .oracle import WaveformScenario, empirical_snr, envelope_gain, simulate_rx
    scn = parse_scenario(_read(args.config))
    ws = WaveformScenario.oversampled(scn.geometry, scn.stmm, scn.cpm, scn.oracle.duration_symbols,
                                      scn.oracle.oversampling, link=scn.link, downlink_waveform=scn.oracle.downlink,
                                      phase_law_choice=scn.stmm.architecture)
    stream = SymbolStream.random(scn.cpm.alphabet_M, ws.required_symbols, args.seed)
    gain = envelope_gain(ws, stream, args.seed)
    snr = empirical_snr(ws, stream, noise_on=True, trials=100, seed=args.seed)
    record = simulate_rx(ws, stream, args.seed, noise=True)
    stem = os.path.splitext(os.path.basename(args.config))[0]
    summary = write_csv(
        ["sample_rate", "n_samples", "gain_db", "snr_db", "sinr_db", "noise_ci_halfwidth"],
        [[ws.sample_rate, ws.n_samples, 10 * math.log10(gain), 10 * math.log10(snr.snr),
          10 * math.log10(snr.sinr), snr.noise.ci_halfwidth]])
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"{stem}.iq"), "wb") as fh:
        fh.write(record.to_bytes())
    _write_files(args.out, {f"{stem}_oracle.csv": summary})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for every random draw")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweep points")
    common.add_argument("--exact-phase", action="store_true",
                        help="use the unlinearized elevation-error phase in the CSI loss")

    parser = argparse.ArgumentParser(prog="stmm", description="Space-time modulated metasurface link simulator")
    sub = parser.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("preset", parents=[common], help="regenerate one figure's CSVs")
    p.add_argument("name", choices=PRESET_NAMES)
    p.set_defaults(func=_cmd_preset)
    for verb, func, text in (("sweep", _cmd_sweep, "run the [sweep] section of a config"),
                             ("validate", _cmd_validate, "parse a config and print its canonical form"),
                             ("oracle", _cmd_oracle, "run the time-domain simulator on a config")):
        p = sub.add_parser(verb, parents=[common], help=text)
        p.add_argument("config")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        parser.error("--seed must be an unsigned 64-bit integer")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stmm: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DomainError) as exc:
        print(f"stmm: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
