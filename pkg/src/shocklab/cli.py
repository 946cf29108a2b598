"""Command line entry point.

    shocklab <profile|evolve|contraction|decay|inviscid|counterexample|poincare>
             [--config FILE] [--set key=value ...] [flags]

Exit codes: 0 all assertions passed, 1 assertion failure, 2 configuration
or runtime error.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .experiments import (ExperimentConfig, emit_results, run_contraction,
                          run_counterexample, run_decay, run_inviscid,
                          run_poincare_suite)
from .fluxes import flux_from_spec
from .profiles import compute_profile, profile_l2_norms, write_profile_csv
from .solver import Field, SolveOptions, evolve, evolve_shifted


def _parse_override(item: str):
    key, _, value = item.partition("=")
    if not key or not _:
        raise argparse.ArgumentTypeError(f"override must look like key=value: {item!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _load_config(args, flag_overrides=None) -> dict:
    """Precedence, lowest to highest: config file, direct flags, --set."""
    raw = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw.update(json.load(fh))
    raw.update(flag_overrides or {})
    for key, value in getattr(args, "set", None) or []:
        raw[key] = value
    return raw


def _add_flux_flags(p):
    p.add_argument("--flux-kind", default=None,
                   choices=["quadratic", "quadratic_plus_sine", "tabulated",
                            "counterexample"])
    p.add_argument("--flux-a", type=float, default=None)
    p.add_argument("--flux-sine-amplitude", type=float, default=None)
    p.add_argument("--flux-sine-frequency", type=float, default=None)
    p.add_argument("--flux-table-path", default=None)
    p.add_argument("--flux-g2-sup", type=float, default=None)


def _flux_overrides(args) -> dict:
    out = {}
    for flag, key in [("flux_kind", "flux_kind"), ("flux_a", "flux_a"),
                      ("flux_sine_amplitude", "flux_sine_amplitude"),
                      ("flux_sine_frequency", "flux_sine_frequency"),
                      ("flux_table_path", "flux_table_path"),
                      ("flux_g2_sup", "flux_g2_sup")]:
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    return out


def _cmd_profile(args) -> int:
    raw = _load_config(args)
    raw.update(_flux_overrides(args))
    if args.ul is not None:
        raw["u_minus"] = args.ul
    if args.ur is not None:
        raw["u_plus"] = args.ur
    flux = flux_from_spec(raw)
    profile = compute_profile(flux, raw.get("u_minus", 1.0), raw.get("u_plus", -1.0),
                              half_width=args.half_width, n=args.n)
    out = Path(args.out) if args.out else Path("profile.csv")
    write_profile_csv(profile, out)
    nd, ns = profile_l2_norms(profile)
    print(json.dumps({
        "sigma": profile.sigma, "c_minus": profile.c_minus, "c_plus": profile.c_plus,
        "half_width": profile.half_width, "n": len(profile.xs),
        "norm_S_prime_L2": nd, "norm_S_minus_step_L2": ns,
        "csv": str(out)}, indent=2))
    return 0


def _cmd_evolve(args) -> int:
    raw = _load_config(args)
    raw.update(_flux_overrides(args))
    flux = flux_from_spec(raw)
    u_minus = args.ul if args.ul is not None else raw.get("u_minus", 1.0)
    u_plus = args.ur if args.ur is not None else raw.get("u_plus", -1.0)
    profile = compute_profile(flux, u_minus, u_plus)
    xs = np.linspace(-args.L, args.L, args.nx)
    s, _ = profile.sample(xs)
    u0 = Field(xs=xs, u=s, t=0.0)
    snaps = np.arange(0.0, args.tend + 1e-12, args.snap_every) if args.snap_every \
        else None
    opts = SolveOptions(**{k: raw[k] for k in ("method", "flux_scheme", "rtol")
                           if k in raw})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.shifted:
        traj, shift = evolve_shifted(flux, profile, u0, args.tend,
                                     snapshot_times=snaps, opts=opts)
        shift_payload = {"ts": shift.ts.tolist(), "X": shift.X.tolist(),
                         "Xdot": shift.Xdot.tolist()}
    else:
        traj = evolve(flux, u0, args.viscosity, args.tend,
                      snapshot_times=snaps, opts=opts)
        shift_payload = None
    for k, f in enumerate(traj.snapshots):
        with open(out / f"snapshot_{k:04d}.csv", "w") as fh:
            fh.write("x,u\n")
            for x, u in zip(f.xs, f.u):
                fh.write(f"{x:.17g},{u:.17g}\n")
    manifest = {"grid": {"L": args.L, "nx": args.nx}, "viscosity": args.viscosity,
                "t_end": args.tend, "shifted": bool(args.shifted),
                "scheme": {"method": opts.method, "flux_scheme": opts.flux_scheme,
                           "rtol": opts.rtol},
                "times": traj.times.tolist(),
                "conservation_defect": traj.conservation_defect.tolist(),
                "shift": shift_payload}
    with open(out / "run.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(traj.snapshots)} snapshots to {out}")
    return 0


_EXPERIMENTS = {
    "contraction": run_contraction,
    "decay": run_decay,
    "inviscid": run_inviscid,
    "poincare": run_poincare_suite,
    "counterexample": run_counterexample,
}


def _cmd_experiment(name, args, flag_overrides=None) -> int:
    raw = _load_config(args, flag_overrides=flag_overrides)
    raw.setdefault("experiment", name)
    config = ExperimentConfig.from_dict(raw)
    report = _EXPERIMENTS[name](config)
    out_dir = args.out or config.out_dir or f"out_{name}"
    written = emit_results(report, out_dir)
    print(json.dumps({"experiment": name, "passed": report.passed,
                      "outputs": [str(p) for p in written]}, indent=2))
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shocklab",
        description="viscous shock contraction laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_prof = sub.add_parser("profile", help="compute a shock profile, write CSV")
    _add_flux_flags(p_prof)
    p_prof.add_argument("--ul", type=float, default=None, help="left state u_minus")
    p_prof.add_argument("--ur", type=float, default=None, help="right state u_plus")
    p_prof.add_argument("--half-width", type=float, default=None)
    p_prof.add_argument("--n", type=int, default=4097)
    p_prof.add_argument("--out", default=None)

    p_evo = sub.add_parser("evolve", help="evolve the viscous law, write snapshots")
    _add_flux_flags(p_evo)
    p_evo.add_argument("--ul", type=float, default=None)
    p_evo.add_argument("--ur", type=float, default=None)
    p_evo.add_argument("--L", type=float, default=20.0)
    p_evo.add_argument("--nx", type=int, default=1025)
    p_evo.add_argument("--tend", type=float, default=1.0)
    p_evo.add_argument("--viscosity", type=float, default=1.0)
    p_evo.add_argument("--shifted", action="store_true")
    p_evo.add_argument("--snap-every", type=float, default=None)
    p_evo.add_argument("--out", default="out_evolve")

    for name, help_text in [
            ("contraction", "shifted run asserting non-increase of the distance"),
            ("decay", "long-horizon decay rate fit"),
            ("inviscid", "vanishing-viscosity sweep with rescaling check"),
            ("poincare", "randomized weighted Poincare verification")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None)
        p.add_argument("--set", action="append", type=_parse_override,
                       metavar="key=value")
        p.add_argument("--out", default=None)

    p_cx = sub.add_parser("counterexample",
                          help="build the non-contracting flux, sweep shifts")
    p_cx.add_argument("--config", default=None)
    p_cx.add_argument("--set", action="append", type=_parse_override,
                      metavar="key=value")
    p_cx.add_argument("--a", type=float, default=None)
    p_cx.add_argument("--alpha", type=float, default=None)
    p_cx.add_argument("--width", type=float, default=None)
    p_cx.add_argument("--eps0", type=float, default=None)
    p_cx.add_argument("--lipschitz-bound", type=float, default=None)
    p_cx.add_argument("--tmax", type=float, default=None)
    p_cx.add_argument("--out", default=None)

    for p in [p_prof, p_evo]:
        p.add_argument("--config", default=None)
        p.add_argument("--set", action="append", type=_parse_override,
                       metavar="key=value")

    args = parser.parse_args(argv)
    try:
        if args.command == "profile":
            return _cmd_profile(args)
        if args.command == "evolve":
            return _cmd_evolve(args)
        if args.command == "counterexample":
            overrides = {}
            for flag, key in [("a", "cx_a"), ("alpha", "cx_alpha"),
                              ("width", "cx_width"), ("eps0", "cx_eps0"),
                              ("lipschitz_bound", "lipschitz_bound"),
                              ("tmax", "t_max")]:
                value = getattr(args, flag)
                if value is not None:
                    overrides[key] = value
            return _cmd_experiment("counterexample", args, flag_overrides=overrides)
        return _cmd_experiment(args.command, args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
