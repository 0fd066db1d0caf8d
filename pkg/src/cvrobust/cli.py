"""``cv-robust`` command-line interface.

Subcommands:

    simulate          trajectory of one family -> CSV
    separation-time   separation time of one family
    compare           full iso-energy experiment (exit 0 verdict true, 2 false)
    gaussian-oracle   covariance-matrix fast path for the two-mode squeezed state

Each subcommand accepts ``--config FILE`` and flags that override the
corresponding configuration keys.  For ``simulate`` and
``separation-time`` the first family of the configuration is used unless
a family is given on the command line.
"""

from __future__ import annotations

import argparse
import copy
import logging
import math
import sys

from . import __version__
from .channels import ChannelParams
from .entanglement import separation_time
from .errors import ConfigError, CVRobustError
from .experiment import (
    NEGATIVITY_CAVEAT,
    TRAJECTORY_COLUMNS,
    ExperimentConfig,
    _csv_text,
    fmt,
    load_config_dict,
    prepare_states,
    run_comparison,
    trajectory_records,
    write_trajectories,
)
from .gaussian import (
    channel_on_covariance,
    gaussian_log_negativity,
    gaussian_separation_time,
    pt_min_symplectic_eigenvalue,
    symmetric_separation_time,
    tmss_covariance,
)

log = logging.getLogger("cvrobust")


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_channel_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("channel")
    g.add_argument("--kind", choices=["loss_thermal", "dephasing"])
    g.add_argument("--gamma", type=float)
    g.add_argument("--n1", type=float, help="thermal occupation of mode 1's environment")
    g.add_argument("--n2", type=float, help="thermal occupation of mode 2's environment")
    g.add_argument("--n", type=float, help="set both occupations")


def _add_run_args(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON experiment configuration")
    _add_channel_args(p)
    p.add_argument("--cutoff", type=int, help="Fock dimension per mode")
    p.add_argument("--dt", type=float, help="RK4 step")
    p.add_argument("--no-hermitize", action="store_true", help="skip (rho + rho^dag)/2 after each step")
    p.add_argument("--energy", type=float, dest="target_energy", help="match families to this total energy")
    p.add_argument("--times", type=_floats, help="comma-separated sample times starting at 0")
    p.add_argument("--tol-time", type=float)
    p.add_argument("--time-unit", choices=["absolute", "inverse_gamma"])


def _add_family_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("state family (replaces the configured families)")
    g.add_argument("--family", choices=["tmss", "pnes2", "pnes3", "pnes"])
    g.add_argument("--lambda", type=float, dest="lam", help="TMSS squeezing parameter")
    g.add_argument("--theta", type=float, help="PNES mixing angle")
    g.add_argument("--level", type=int, help="excited level of a two-term PNES")
    g.add_argument("--levels", type=lambda s: [int(v) for v in s.split(",")], help="p,q of a three-term PNES")
    g.add_argument("--phi", type=float, help="weight angle of a three-term PNES")
    g.add_argument("--coefficients", type=_floats, help="c0,c1,... of a general PNES")


def _merged_config(args, need_families=True) -> ExperimentConfig:
    raw = copy.deepcopy(load_config_dict(args.config)) if args.config else {}
    ch = raw.setdefault("channel", {})
    for key in ("kind", "gamma", "n1", "n2"):
        if getattr(args, key, None) is not None:
            ch[key] = getattr(args, key)
    if getattr(args, "n", None) is not None:
        ch["n1"] = ch["n2"] = args.n
    for attr, key in (
        ("cutoff", "cutoff"),
        ("target_energy", "target_energy"),
        ("times", "sample_times"),
        ("time_unit", "time_unit"),
        ("workers", "workers"),
    ):
        if getattr(args, attr, None) is not None:
            raw[key] = getattr(args, attr)
    if getattr(args, "dt", None) is not None:
        raw.setdefault("integrator", {})["dt"] = args.dt
    if getattr(args, "no_hermitize", False):
        raw.setdefault("integrator", {})["hermitize_each_step"] = False
    if getattr(args, "tol_time", None) is not None:
        raw.setdefault("separation", {})["tol_time"] = args.tol_time
    if getattr(args, "out", None) is not None:
        raw["output_path"] = args.out
    if getattr(args, "family", None):
        fam = {"kind": args.family}
        for attr, key in (
            ("lam", "lambda"),
            ("theta", "theta"),
            ("level", "level"),
            ("levels", "levels"),
            ("phi", "phi"),
            ("coefficients", "coefficients"),
        ):
            if getattr(args, attr, None) is not None:
                fam[key] = getattr(args, attr)
        raw["families"] = [fam]
    elif not need_families:
        raw.setdefault("families", [{"kind": "tmss", "lambda": 0.0}])
    return ExperimentConfig.from_dict(raw)


def cmd_simulate(args) -> int:
    cfg = _merged_config(args)
    spec, ket, param = prepare_states(cfg)[0]
    records = trajectory_records(ket, cfg.channel, cfg.integrator, cfg.sample_times)
    text = _csv_text(TRAJECTORY_COLUMNS, [r.row() for r in records])
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        print(f"{spec.label}: {len(records)} samples written to {args.out} (cutoff {cfg.cutoff})")
    else:
        sys.stdout.write(text)
    return 0


def cmd_separation_time(args) -> int:
    cfg = _merged_config(args)
    spec, ket, param = prepare_states(cfg)[0]
    sep = separation_time(ket, cfg.channel, cfg.integrator, cfg.tol_time, cfg.threshold)
    print(f"family={spec.label} parameter={'' if param is None else fmt(param)} cutoff={cfg.cutoff}")
    print(f"tau={fmt(sep.tau)} bracket=[{fmt(sep.bracket_low)}, {fmt(sep.bracket_high)}] probes={sep.probes}")
    return 0


def cmd_compare(args) -> int:
    if not args.config:
        raise ConfigError("compare requires --config")
    cfg = _merged_config(args)
    report = run_comparison(cfg)
    write_trajectories(report, cfg.output_path)
    ref = report.gaussian_tau
    for fam in report.families:
        tau = "n/a" if fam.separation is None else fmt(fam.separation.tau)
        print(f"{fam.spec.label:<14} E0={fmt(fam.initial_energy):<14} tau={tau}")
    print(f"max energy-law residual: {fmt(report.max_energy_residual)}")
    if report.verdict is None:
        print("verdict: n/a (no loss/thermal channel)")
        return 0
    print(f"verdict: {'PASS' if report.verdict else 'FAIL'} (gaussian tau={fmt(ref)})")
    print(f"note: {NEGATIVITY_CAVEAT}")
    print(f"results in {cfg.output_path}")
    return 0 if report.verdict else 2


def cmd_gaussian_oracle(args) -> int:
    params = ChannelParams(
        gamma=args.gamma,
        n1=args.n if args.n is not None else args.n1,
        n2=args.n if args.n is not None else args.n2,
    )
    if args.r is not None:
        r = args.r
    elif args.lam is not None:
        r = math.atanh(args.lam)
    else:
        lam = _lambda_for_energy(args.energy)
        r = math.atanh(lam)
    cm0 = tmss_covariance(r)
    rows = []
    for t in args.times:
        cm = channel_on_covariance(cm0, params, t)
        rows.append([fmt(t), fmt(cm.energy()), fmt(pt_min_symplectic_eigenvalue(cm)), fmt(gaussian_log_negativity(cm))])
    text = _csv_text(("t", "energy", "pt_min_symplectic", "log_negativity"), rows)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(f"r={fmt(r)} lambda={fmt(math.tanh(r))} E0={fmt(cm0.energy())}")
    if params.n1 > 0 or params.n2 > 0:
        print(f"tau(bisection)={fmt(gaussian_separation_time(r, params))}")
        if params.n1 == params.n2:
            print(f"tau(closed form)={fmt(symmetric_separation_time(r, params.gamma, params.n1))}")
    else:
        print("tau=inf (pure loss)")
    return 0


def _lambda_for_energy(energy: float) -> float:
    # inverts 2 lam^2 / (1 - lam^2) = E
    if energy < 0:
        raise ValueError(f"energy must be >= 0, got {energy}")
    return math.sqrt(energy / (energy + 2.0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cv-robust",
        description="Entanglement of two-mode bosonic states under loss/thermal and dephasing channels.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="trajectory of one family")
    _add_run_args(p)
    _add_family_args(p)
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("separation-time", help="separation time of one family")
    _add_run_args(p)
    _add_family_args(p)
    p.set_defaults(func=cmd_separation_time)

    p = sub.add_parser("compare", help="iso-energy robustness comparison")
    _add_run_args(p)
    p.add_argument("--out", help="output directory (overrides output_path)")
    p.add_argument("--workers", type=int, help="families processed in parallel")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gaussian-oracle", help="covariance-matrix track for the TMSS")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--n1", type=float, default=0.0)
    p.add_argument("--n2", type=float, default=0.0)
    p.add_argument("--n", type=float, help="set both occupations")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--lambda", type=float, dest="lam")
    src.add_argument("--r", type=float, help="squeezing r = atanh(lambda)")
    src.add_argument("--energy", type=float, help="total mean photon number")
    p.add_argument("--times", type=_floats, default=[0.0, 0.25, 0.5, 0.75, 1.0])
    p.add_argument("--out", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_gaussian_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (CVRobustError, OSError, ValueError) as exc:
        print(f"cv-robust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
