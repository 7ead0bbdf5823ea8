"""Command-line interface for batch simulation and analysis.

Subcommands:

    run         simulate one scenario file, print the summary, write outputs
    compare     run several scenario files and tabulate their metrics
    portrait    steady state and lag of the damped despun-frame reduction
    linearize   closed-loop spectra at both equilibria for a scenario
    gains-check evaluate a law's stability gain condition

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import finite_diff_jacobian, hurwitz, linearize, phase_portrait
from .controllers import ControlLaw, Gains, gain_check
from .dynamics import DEFAULT_TAU_M, BodyParams, GyroCoeffs
from .errors import (MismatchedScenariosError, NoConvergenceError, ParseError,
                     SingularSystemError, ValidationError)
from .harness import compare, emit, load_scenario, run, summary_text

CONFIG_ERROR = 2
NUMERICAL_ERROR = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spinaxis",
        description="Spin-axis control of axisymmetric spinning rigid bodies.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("config", help="scenario TOML file")
    p_run.add_argument("--out-dir", type=Path,
                       help="write <stem>.csv, <stem>_sphere.csv and <stem>_summary.txt here")
    p_run.add_argument("--lenient", action="store_true",
                       help="downgrade strict scenario checks to warnings")

    p_cmp = sub.add_parser("compare", help="run several scenarios and tabulate metrics")
    p_cmp.add_argument("configs", nargs="+", help="scenario TOML files")
    p_cmp.add_argument("--json", action="store_true", help="machine-readable output")

    p_por = sub.add_parser("portrait", help="despun-frame phase portrait summary")
    p_por.add_argument("--kbar", type=float, default=None,
                       help="gyro frequency of the despun frame [rad/s] "
                            "(default: from the built-in body parameters)")
    p_por.add_argument("--kd", type=float, default=1.0, help="damping [1/s]")
    p_por.add_argument("--ux", type=float, default=0.0, help="x torque [rad/s^2]")
    p_por.add_argument("--uy", type=float, default=0.0, help="y torque [rad/s^2]")
    p_por.add_argument("--grid", type=int, default=0,
                       help="N for an NxN grid of initial rates (0: steady-state only)")
    p_por.add_argument("--span", type=float, default=None,
                       help="half-width of the initial-rate grid [rad/s]")
    p_por.add_argument("--out", type=Path, help="write sampled trajectories as CSV")

    p_lin = sub.add_parser("linearize", help="closed-loop spectra for a scenario")
    p_lin.add_argument("config", help="scenario TOML file")
    p_lin.add_argument("--check-oracle", action="store_true",
                       help="also report the finite-difference mismatch")

    p_gc = sub.add_parser("gains-check", help="evaluate a stability gain condition")
    p_gc.add_argument("--law", required=True,
                      choices=[m.value for m in ControlLaw])
    p_gc.add_argument("--kp", type=float, required=True)
    p_gc.add_argument("--kd", type=float, required=True)
    p_gc.add_argument("--tau-m", type=float, default=DEFAULT_TAU_M)
    return parser


def _cmd_run(args):
    scenario = load_scenario(args.config, strict=False if args.lenient else None)
    log = run(scenario)
    sys.stdout.write(summary_text(log))
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        stem = Path(args.config).stem
        emit(log, "csv", args.out_dir / f"{stem}.csv")
        emit(log, "sphere_path", args.out_dir / f"{stem}_sphere.csv")
        emit(log, "summary", args.out_dir / f"{stem}_summary.txt")
    return 0


def _cmd_compare(args):
    scenarios = [load_scenario(c) for c in args.configs]
    report = compare(scenarios)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(report.to_text())
    return 0


def _cmd_portrait(args):
    if args.kbar is None:
        coeffs = GyroCoeffs.from_body(BodyParams())
    else:
        coeffs = GyroCoeffs(k_body=math.nan, k_despun=args.kbar)
    u_bar = np.array([args.ux, args.uy])

    ics = [[0.0, 0.0]]
    if args.grid > 0:
        span = args.span
        if span is None:
            scale = np.linalg.norm(u_bar) / max(args.kd, 1e-12) if np.linalg.norm(u_bar) else 1.0
            span = 4.0 * scale
        axis = np.linspace(-span, span, args.grid)
        ics = [[x, y] for x in axis for y in axis]

    portrait = phase_portrait(coeffs, args.kd, u_bar, ics)
    print(f"k_despun = {portrait.coeffs.k_despun:.6g} rad/s, k_d = {portrait.k_d:.6g} 1/s")
    print(f"omega_ss = [{portrait.omega_ss[0]:.6g}, {portrait.omega_ss[1]:.6g}] rad/s")
    if math.isnan(portrait.lag_rad):
        print("lag = undefined (zero torque)")
    else:
        print(f"lag = {math.degrees(portrait.lag_rad):.4f} deg")
    if args.out is not None:
        lines = ["trajectory,t,wx,wy"]
        for i in range(portrait.ics.shape[0]):
            for j, t in enumerate(portrait.times):
                w = portrait.trajectories[i, j]
                lines.append(f"{i},{t!r},{w[0]!r},{w[1]!r}")
        args.out.write_text("\n".join(lines) + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_linearize(args):
    scenario = load_scenario(args.config)
    ref = scenario.ref
    for gamma_eq, name in ((ref.gamma_d, "desired"), (-ref.gamma_d, "antipode")):
        print(f"equilibrium: {name}")
        lin = linearize(scenario.law, gamma_eq, ref, scenario.gains, scenario.body)
        is_hurwitz, spectrum = hurwitz(lin)
        verdict = "Hurwitz" if is_hurwitz else "unstable"
        print(f"  {scenario.law.value}: {verdict}")
        for ev in spectrum:
            print(f"    {ev.real:+.6f} {ev.imag:+.6f}j")
        if args.check_oracle:
            fd = finite_diff_jacobian(scenario.law, gamma_eq, ref,
                                      scenario.gains, scenario.body)
            rel = (np.linalg.norm(fd - lin.matrix, "fro")
                   / np.linalg.norm(lin.matrix, "fro"))
            print(f"  finite-difference mismatch: {rel:.3e} (relative Frobenius)")
    return 0


def _cmd_gains_check(args):
    gains = Gains(k_p=args.kp, k_d=args.kd)
    result = gain_check(args.law, gains, args.tau_m)
    print(f"law = {args.law}")
    print(f"condition: k_p > 0 and k_d > {result.boundary:.6g}")
    print(f"margin = {result.margin:.6g}")
    print("determinant chain: " + ", ".join(f"{m:.6g}" for m in result.minors))
    print("verdict: " + ("pass" if result.ok else "fail"))
    return 0


_HANDLERS = {
    "run": _cmd_run,
    "compare": _cmd_compare,
    "portrait": _cmd_portrait,
    "linearize": _cmd_linearize,
    "gains-check": _cmd_gains_check,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ParseError, ValidationError, MismatchedScenariosError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (NoConvergenceError, SingularSystemError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
