"""ionforce command line.

All physical inputs are SI: angular frequencies in rad/s (a quoted "kHz" is
1e3 rad/s), forces in N, spreads in m, times in s, heating rates in quanta/s.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from ..dynamics import SignalTrace
from ..hilbert import HilbertSpace, NumericalError
from ..models import ProbeParams
from ..sensing import estimate_axial_force, estimate_transverse_force, heating_limited_sensitivity, shot_noise_sensitivity
from ..swtransform import double_commutator_norm, first_order_condition, scaling_slope, sw_scaling
from .config import ConfigError, check_writable, load_config
from .figures import FIGURES, reproduce_figure
from .output import read_signal_csv
from .runner import UNITS, run, sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _probe_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--probe", required=True, type=str.upper, choices=["JC", "QR", "JT"])
    p.add_argument("--omega", type=float, required=True, help="phonon detuning omega [rad/s]")
    p.add_argument("--g", type=float, required=True, help="spin-phonon coupling g [rad/s]")
    p.add_argument("--z", type=float, required=True, help="ground-state spread [m]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ionforce", description=f"Trapped-ion force sensing simulator. Units: {UNITS}.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one config and write CSV + metadata")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=".")
    p.add_argument("--svg", action="store_true", help="also write an SVG plot")

    p = sub.add_parser("sensitivity", help="closed-form force sensitivity [N/sqrt(Hz)]")
    _probe_args(p)
    p.add_argument("--heating", type=float, nargs="+", default=None, help="heating rate(s) [quanta/s]")
    p.add_argument("--t", type=float, default=None, help="evolution time for the shot-noise limit [s]")

    p = sub.add_parser("estimate", help="fit a force to signal CSV file(s)")
    _probe_args(p)
    p.add_argument("--csv", nargs="+", required=True)
    p.add_argument("--phi", type=float, nargs="+", default=None, help="Ramsey phase of each CSV (JT)")
    p.add_argument("--no-decay", action="store_true", help="fit without an exponential envelope")

    p = sub.add_parser("sweep", help="Cartesian-product parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", default=".")

    p = sub.add_parser("verify-sw", help="numerical checks of the phonon-eliminating transformation")
    p.add_argument("--kind", required=True, type=str.upper, choices=["JC", "QR", "JT"])
    p.add_argument("--omega", type=float, default=1.7e5)
    p.add_argument("--g", type=float, default=4e3)
    p.add_argument("--z", type=float, default=14.5e-9)
    p.add_argument("--force", type=float, default=20e-24)
    p.add_argument("--cutoff", type=int, default=None)

    p = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    p.add_argument("--figure", required=True, choices=FIGURES)
    p.add_argument("--output-dir", default=".")
    return parser


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    outdir = Path(args.output_dir)
    check_writable(outdir)
    out = run(config, outdir, svg=args.svg)
    print(out["csv"])
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    ncomp = 2 if args.probe == "JT" else 1
    heating = args.heating or [0.0]
    if len(heating) not in (1, ncomp):
        raise ConfigError(f"{args.probe} takes {ncomp} heating rate(s)")
    heating = heating * ncomp if len(heating) == 1 else heating
    params = ProbeParams(args.probe, g=args.g, omega=args.omega, z=args.z, heating=tuple(heating))
    if any(h > 0 for h in heating):
        report = heating_limited_sensitivity(params)
        print(f"{report.value:.3g}")
        print(f"regime=heating_limited optimal_time={report.inputs['optimal_time']:.6g} s")
    else:
        if args.t is None:
            raise ConfigError("give --heating for the heating-limited value or --t for the shot-noise value")
        report = shot_noise_sensitivity(params, args.t)
        print(f"{report.value:.3g}")
        print(f"regime=shot_noise t={args.t:.6g} s")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    traces = []
    for path in args.csv:
        try:
            t, p = read_signal_csv(path)
        except OSError as exc:
            raise ConfigError(str(exc)) from None
        traces.append(SignalTrace(t, p))
    if args.probe == "JT":
        if args.phi is None or len(args.phi) != len(traces):
            raise ConfigError("JT estimation needs one --phi per CSV")
        for tr, phi in zip(traces, args.phi):
            tr.metadata["phi"] = phi
        params = ProbeParams("JT", g=args.g, omega=args.omega, z=args.z)
        est = estimate_transverse_force(traces, params)
        print(f"{est.magnitude:.6g}")
        print(f"xi={est.xi:.6g} omega_rms={est.diagnostics['omega_rms']:.6g} ambiguous={est.diagnostics['xi_ambiguous']}")
        return EXIT_OK
    if len(traces) != 1:
        raise ConfigError("axial estimation takes exactly one CSV")
    params = ProbeParams(args.probe, g=args.g, omega=args.omega, z=args.z)
    est = estimate_axial_force(traces[0], params, fit_decay=not args.no_decay)
    print(f"{est.magnitude:.6g}")
    print(f"omega_f={est.diagnostics['omega_f']:.6g} gamma={est.diagnostics['gamma']:.6g} "
          f"aliasing={est.diagnostics['aliasing']}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    if not config.sweep:
        raise ConfigError("config has no [sweep] section")
    outdir = Path(args.output_dir)
    check_writable(outdir)
    out = sweep(config, outdir)
    print(out["csv"])
    return EXIT_OK


def _cmd_verify_sw(args) -> int:
    kind = args.kind
    force = (args.force, 0.75 * args.force) if kind == "JT" else args.force
    params = ProbeParams(kind, g=args.g, omega=args.omega, z=args.z, force=force)
    cutoff = args.cutoff or (10 if kind == "JT" else 20)
    space = HilbertSpace((cutoff, cutoff) if kind == "JT" else (cutoff,))
    first = first_order_condition(kind, params, space)
    print(f"first_order_relative={first:.3e}")
    ok = first <= 1e-9
    if kind == "QR":
        dc = double_commutator_norm(kind, params, space)
        print(f"double_commutator_relative={dc:.3e}")
        ok = ok and dc <= 1e-10
    else:
        g_values = args.g * np.logspace(-0.5, 0.5, 5)
        reports = sw_scaling(kind, params, space, g_values)
        slope = scaling_slope(reports)
        for r in reports:
            print(f"g={r.g_value:.6g} residual={r.residual_norm:.6e} relative={r.relative_residual:.3e}")
        print(f"slope={slope:.4f} expected=3")
        ok = ok and abs(slope - 3.0) <= 0.3
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_NUMERICAL


def _cmd_reproduce(args) -> int:
    outdir = Path(args.output_dir)
    check_writable(outdir)
    out = reproduce_figure(args.figure, outdir)
    print(out["csv"])
    for key, value in out["meta"].items():
        if isinstance(value, float):
            print(f"{key}={value:.6g}")
    return EXIT_OK


COMMANDS = {
    "simulate": _cmd_simulate,
    "sensitivity": _cmd_sensitivity,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
    "verify-sw": _cmd_verify_sw,
    "reproduce": _cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
