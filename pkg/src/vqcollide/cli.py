"""Command-line entry point: encode-dump, evolve, sweep, compare, selftest.

Exit codes: 0 success, 1 failed self-test, 2 configuration or input error,
3 sweep completed with warnings.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields

import numpy as np

from .avqds import evolve_avqds, write_step_log
from .collision import COUPLINGS, TrajectoryContext, build_frames, write_frame_dump
from .config import METHODS, PROFILES, SweepConfig, load_config, parse_value
from .errors import ConfigError, ContractError, EmptyComparisonError
from .observables import write_record_csv
from .reference import compare_reference, experimental_datasets, load_reference, write_comparison_csv
from .selftest import run_selftest
from .sweep import initial_state, read_sigma_csv, run_sweep, run_trajectory, write_outputs

EXIT_OK, EXIT_SELFTEST, EXIT_CONFIG, EXIT_WARN = 0, 1, 2, 3


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_config_flags(p, names=None):
    for f in fields(SweepConfig):
        if names is not None and f.name not in names:
            continue
        p.add_argument(_flag(f.name), dest=f.name, default=None, metavar=f.name.upper(),
                       help=f"override config key {f.name}")


def _overrides(args, names=None):
    out = {}
    for f in fields(SweepConfig):
        if names is not None and f.name not in names:
            continue
        raw = getattr(args, f.name, None)
        if raw is not None:
            out[f.name] = parse_value(f.name, raw)
    return out


def _cmd_encode_dump(args):
    ctx = TrajectoryContext(args.energy, args.b, z_span=args.z_span, n_steps=args.n_steps,
                            coupling=args.coupling)
    if args.frames:
        write_frame_dump(ctx, args.out)
        print(f"wrote {args.out}")
        return EXIT_OK
    h = build_frames(ctx)
    if args.times:
        times = [float(x) for x in args.times.split(",")]
    else:
        times = [-ctx.t_max, 0.0, ctx.t_max]
    g = np.array([h.coefficients(t) for t in times])
    lines = ["term_index,pauli_label," + ",".join(f"g(t={t:.6g})" for t in times)]
    for k, u in enumerate(h.terms):
        lines.append(f"{k},{u.label}," + ",".join(f"{v:.17g}" for v in g[:, k]))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


_EVOLVE_KEYS = ("dt", "l2_cut", "rtol", "atol", "z_span", "n_steps", "coupling", "shots", "seed")


def _cmd_evolve(args):
    cfg = PROFILES["full"].with_overrides(**_overrides(args, _EVOLVE_KEYS))
    methods = METHODS if args.method == "all" else (args.method,)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    status = EXIT_OK
    print("method  P_asym        1-F           1-F_L         max_N_theta  status")
    for m in methods:
        rec = run_trajectory(cfg, args.energy, args.b, method=m, oracle=args.oracle)
        if rec.status == "failed":
            print(f"{m:<7} failed: {rec.error}")
            status = EXIT_WARN
            continue
        print(f"{m:<7} {rec.p_asymptotic:.10f}  {rec.final_infidelity:.6e}  "
              f"{rec.final_bound_infidelity:.6e}  {rec.max_n_theta:<11d}  {rec.status}")
        for w in rec.warnings:
            print(f"  warning: {w}")
        if args.out:
            stem = os.path.join(args.out, f"{m}_E{args.energy:g}_b{args.b:g}")
            write_record_csv(rec, stem + ".csv")
            if m == "avqds":
                ctx = TrajectoryContext(args.energy, args.b, z_span=cfg.z_span,
                                        n_steps=cfg.n_steps, coupling=cfg.coupling)
                _, log = evolve_avqds(build_frames(ctx), initial_state(), ctx.t_grid,
                                      cfg.dt, cfg.l2_cut)
                write_step_log(log, stem + "_steps.csv")
    return status


def _sweep_config(args):
    base = PROFILES[args.profile]
    cfg = load_config(args.config, base) if args.config else base
    return cfg.with_overrides(**_overrides(args))


def _cmd_sweep(args):
    cfg = _sweep_config(args)

    def progress(done, total):
        if not args.quiet and (done == total or done % max(1, total // 20) == 0):
            print(f"  {done}/{total} trajectories", file=sys.stderr)

    res = run_sweep(cfg, progress)
    paths = write_outputs(res)
    for p in res.cross_sections:
        print(f"E = {p.energy_keV:8.3f} keV   sigma = {p.sigma_cm2:9.4f} e-16 cm^2")
    print(f"failed = {res.n_failed}, patched = {res.n_patched}; outputs in {cfg.output_dir}")
    for k in sorted(paths):
        print(f"  {paths[k]}")
    for w in res.warnings:
        print(f"WARNING: {w}", file=sys.stderr)
    return EXIT_WARN if res.warnings else EXIT_OK


def _cmd_compare(args):
    points = read_sigma_csv(args.sigma)
    refs = load_reference(args.reference) if args.reference else experimental_datasets()
    if args.datasets:
        keep = set(args.datasets.split(","))
        refs = [r for r in refs if r.label in keep]
    cmp = compare_reference(points, refs)
    print("dataset  E_keV    sigma_ref  sigma_calc  rel_err_%")
    for r in cmp.rows:
        print(f"{r.label:<8} {r.energy_keV:<8.3g} {r.sigma_ref:<10.4g} {r.sigma_calc:<11.4f} "
              f"{r.rel_error_pct:.2f}")
    print(f"mean relative error {cmp.mean_pct:.2f} %, max {cmp.max_pct:.2f} % "
          f"(E = {cmp.worst.energy_keV:g} keV)")
    if args.out:
        write_comparison_csv(cmp, args.out)
    return EXIT_OK


def _cmd_selftest(args):
    return EXIT_OK if run_selftest() else EXIT_SELFTEST


def build_parser():
    p = argparse.ArgumentParser(prog="vqcollide",
                                description="Variational quantum simulation of H+ + H charge transfer")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("encode-dump", help="dump the encoded Pauli coefficient table")
    e.add_argument("--energy", type=float, required=True, help="collision energy (keV)")
    e.add_argument("--b", type=float, required=True, help="impact parameter (a.u.)")
    e.add_argument("--times", help="comma-separated times (a.u.); default start, 0, end")
    e.add_argument("--frames", action="store_true", help="dump every time frame instead")
    e.add_argument("--z-span", type=float, default=30.0)
    e.add_argument("--n-steps", type=int, default=2001)
    e.add_argument("--coupling", choices=COUPLINGS, default="bare")
    e.add_argument("--out", help="output CSV (default stdout; required with --frames)")
    e.set_defaults(func=_cmd_encode_dump)

    v = sub.add_parser("evolve", help="run one trajectory")
    v.add_argument("--energy", type=float, required=True)
    v.add_argument("--b", type=float, required=True)
    v.add_argument("--method", choices=METHODS + ("all",), default="all")
    v.add_argument("--oracle", action="store_true", help="compute fidelity against exact propagation")
    v.add_argument("--out", help="directory for per-method CSV files")
    _add_config_flags(v, _EVOLVE_KEYS)
    v.set_defaults(func=_cmd_evolve)

    s = sub.add_parser("sweep", help="cross sections and infidelity grids")
    s.add_argument("--config", help="key = value configuration file")
    s.add_argument("--profile", choices=sorted(PROFILES), default="desk")
    s.add_argument("--quiet", action="store_true")
    _add_config_flags(s)
    s.set_defaults(func=_cmd_sweep)

    c = sub.add_parser("compare", help="relative errors against reference cross sections")
    c.add_argument("--sigma", required=True, help="sigma.csv from a sweep")
    c.add_argument("--reference", help="reference file (default: bundled experimental data)")
    c.add_argument("--datasets", help="comma-separated dataset labels to use")
    c.add_argument("--out", help="comparison CSV")
    c.set_defaults(func=_cmd_compare)

    t = sub.add_parser("selftest", help="quick invariant suite")
    t.set_defaults(func=_cmd_selftest)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ContractError, EmptyComparisonError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
