"""Command-line front end.

Subcommands: simulate, ode, boundary, lyapunov, verify, measure, classify.
All outputs are CSV (plus convenience SVG for the vector field and the
value surface); identical arguments and seed give byte-identical files.

Exit codes: 0 success, 1 usage error, 2 verification failure (drift
violations or positive interface curvature), 3 infeasible parameters.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import _svg
from .boundary import exit_distribution_mc, transience_lower_bound
from .fluid import grid_to_csv, integrate, vector_field_grid
from .lyapunov import (
    InfeasibleParameters,
    TuningTargets,
    assemble,
    params_to_text,
    select_parameters,
)
from .network import BUILTIN_NAMES, Network, builtin_network, parse_network_file
from .regions import RegionParams, classify_region, region_map_csv
from .simulate import StopCondition, simulate, trajectory_rng
from .stability import (
    ClassifyConfig,
    classify_stability,
    curvature_report,
    occupation_measure,
    phi_moment,
    verify_drift,
)

PRESETS = {
    "paper-desk": dict(delta0=0.5, eps=0.1, b0=20.0, b1=10.0, b2=50.0, rho=200.0),
}


def _load_network(source: str) -> Network:
    if source.lower() in BUILTIN_NAMES:
        return builtin_network(source)
    return parse_network_file(source)


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _region_params(args) -> RegionParams:
    return RegionParams(b0=args.b0, b1=args.b1, b2=args.b2, rho=args.rho)


def _parse_x0(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _add_common(sp, with_params: bool = False) -> None:
    sp.add_argument("--net", default="crn0", help="builtin name (crn0|crn1|crn2) or network file path")
    sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    sp.add_argument(
        "--out",
        default=os.environ.get("CRNSTAB_OUT", "out"),
        help="output directory (default $CRNSTAB_OUT or ./out)",
    )
    sp.add_argument("--threads", type=int, default=1, help="worker threads (outputs independent of N)")
    if with_params:
        sp.add_argument("--preset", choices=sorted(PRESETS), default="paper-desk")
        sp.add_argument("--delta0", type=float, default=None)
        sp.add_argument("--eps", type=float, default=None)
        sp.add_argument("--b0", type=float, default=None)
        sp.add_argument("--b1", type=float, default=None)
        sp.add_argument("--b2", type=float, default=None)
        sp.add_argument("--rho", type=float, default=None)


def _resolve_params(args) -> None:
    preset = PRESETS[args.preset]
    for key, value in preset.items():
        if getattr(args, key) is None:
            setattr(args, key, value)


def cmd_simulate(args) -> int:
    net = _load_network(args.net)
    jumps = args.jumps
    if jumps is None and args.time is None:
        jumps = 1000
    stop = StopCondition(max_time=args.time, max_jumps=jumps)
    traj = simulate(net, _parse_x0(args.x0), stop, trajectory_rng(args.seed))
    path = _out_path(args, "trajectory.csv")
    with open(path, "w") as fh:
        traj.to_csv(fh)
    print(f"wrote {path} ({traj.n_jumps} jumps)")
    return 0


def cmd_ode(args) -> int:
    net = _load_network(args.net)
    x0 = tuple(float(v) for v in args.x0.split(","))
    path = integrate(net, x0, t_end=args.t_end, tol=args.tol)
    p1 = _out_path(args, "ode_path.csv")
    with open(p1, "w") as fh:
        path.to_csv(fh)
    lo1, hi1, lo2, hi2 = (float(v) for v in args.bounds.split(":"))
    points, values = vector_field_grid(net, (lo1, hi1, lo2, hi2), args.grid_n)
    p2 = _out_path(args, "field.csv")
    with open(p2, "w") as fh:
        grid_to_csv(points, values, fh)
    p3 = _out_path(args, "field.svg")
    with open(p3, "w") as fh:
        fh.write(_svg.vector_field_svg(points, values))
    print(f"wrote {p1}, {p2}, {p3}")
    return 0


def cmd_boundary(args) -> int:
    variant = args.net.lower()
    if variant not in BUILTIN_NAMES:
        print("boundary analysis applies to the builtin variants only", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    law = exit_distribution_mc(variant, args.k0, args.samples, rng, max_positions=args.budget // 2)
    p1 = _out_path(args, "exitlaw.csv")
    with open(p1, "w") as fh:
        law.to_csv(fh, b_max=args.k0 + 100)
    p2 = _out_path(args, "boundary_report.txt")
    with open(p2, "w") as fh:
        fh.write(f"variant: {variant}\nk0: {args.k0}\nsamples: {args.samples}\n")
        fh.write(f"censored fraction (stayed in the strip): {law.censored:.6g}\n")
        fh.write(f"never-exit lower bound: {transience_lower_bound(args.k0):.10f}\n")
    print(f"wrote {p1}, {p2}")
    return 0


def cmd_lyapunov(args) -> int:
    _resolve_params(args)
    variant = args.net.lower()
    try:
        params, report = select_parameters(
            args.delta0, args.eps, variant, _region_params(args)
        )
    except InfeasibleParameters as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        with open(_out_path(args, "margins.csv"), "w") as fh:
            exc.report.to_csv(fh)
        return 3
    V = assemble(params)
    with open(_out_path(args, "params.txt"), "w") as fh:
        fh.write(params_to_text(params))
    with open(_out_path(args, "margins.csv"), "w") as fh:
        report.to_csv(fh)
    # value surface over a lattice window
    n = args.window
    coords = np.arange(0, n, max(n // 160, 1), dtype=np.int64)
    g1, g2 = np.meshgrid(coords, coords, indexing="ij")
    states = np.column_stack([g1.ravel(), g2.ravel()])
    vals, codes, rates = V.evaluate(states)
    from .regions import REGION_TAGS

    tags = [REGION_TAGS[c] for c in codes]
    with open(_out_path(args, "vsurface.csv"), "w") as fh:
        fh.write("x1,x2,region,V,h\n")
        for (a, b), tag, v, h in zip(states, tags, vals, rates):
            fh.write(f"{a},{b},{tag},{v:.12g},{h:.12g}\n")
    with open(_out_path(args, "vsurface.svg"), "w") as fh:
        fh.write(_svg.surface_svg(states // max(n // 160, 1), vals, tags))
    with open(_out_path(args, "regions.csv"), "w") as fh:
        region_map_csv(params.region, n, n, fh, stride=max(n // 160, 1))
    print(f"wrote params.txt, margins.csv, vsurface.csv, vsurface.svg, regions.csv in {args.out}")
    return 0


def cmd_verify(args) -> int:
    _resolve_params(args)
    variant = args.net.lower()
    net = _load_network(args.net)
    r_lo, r_hi = (float(v) for v in args.annulus.split(":"))
    try:
        params, report = select_parameters(
            args.delta0, args.eps, variant, _region_params(args)
        )
    except InfeasibleParameters as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    V = assemble(params)
    drift = verify_drift(net, V, r_lo, r_hi, stride=args.stride, threads=args.threads)
    with open(_out_path(args, "drift_report.csv"), "w") as fh:
        drift.to_csv(fh)
    bad_interfaces = []
    with open(_out_path(args, "curvature.csv"), "w") as fh:
        fh.write("interface,x1,x2,curvature\n")
        for tag in ("T12", "T23", "T34", "T01"):
            rep = curvature_report(V, tag, params.region.rho, 100 * params.region.rho)
            for (a, b), v in rep.samples:
                fh.write(f"{tag},{a},{b},{v:.9g}\n")
            if rep.worst >= 0:
                bad_interfaces.append(tag)
    with open(_out_path(args, "margins.csv"), "w") as fh:
        report.to_csv(fh)
    print(
        f"swept {drift.n_points} states; {len(drift.violations)} violations; "
        f"worst margin {drift.worst_margin:.6g} at {drift.worst_point}"
    )
    if drift.violations or bad_interfaces:
        if bad_interfaces:
            print(f"nonnegative curvature at: {', '.join(bad_interfaces)}", file=sys.stderr)
        return 2
    return 0


def cmd_measure(args) -> int:
    net = _load_network(args.net)
    variant = args.net.lower()
    mu = occupation_measure(net, _parse_x0(args.x0), args.jumps, seed=args.seed)
    p1 = _out_path(args, "occupation.csv")
    with open(p1, "w") as fh:
        mu.to_csv(fh)
    wrote = [p1]
    if variant in ("crn0", "crn1"):
        params, _ = select_parameters(0.5, 0.1, variant)
        V = assemble(params)
        deciles, total = phi_moment(mu, V)
        p2 = _out_path(args, "phi_moment.csv")
        with open(p2, "w") as fh:
            fh.write("decile,cumulative\n")
            for i, v in enumerate(deciles, start=1):
                fh.write(f"{i},{v:.12g}\n")
            fh.write(f"total,{total:.12g}\n")
        wrote.append(p2)
    print("wrote " + ", ".join(wrote))
    return 0


def cmd_classify(args) -> int:
    net = _load_network(args.net)
    cfg = ClassifyConfig(seed=args.seed)
    verdict = classify_stability(net, cfg)
    path = _out_path(args, "classification.txt")
    with open(path, "w") as fh:
        fh.write(f"network: {args.net}\n")
        fh.write(verdict.report_text())
    print(f"{args.net}: {verdict.decision} (wrote {path})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crnstab",
        description="stochastic mass-action networks: simulation, fluid limits, "
        "boundary laws, Lyapunov construction and stability verification",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="exact stochastic simulation; writes trajectory.csv (t,x1,..,xd)")
    _add_common(sp)
    sp.add_argument("--x0", default="0,0", help="initial counts, comma separated")
    sp.add_argument("--jumps", type=int, default=None, help="jump budget")
    sp.add_argument("--time", type=float, default=None, help="time budget")
    sp.set_defaults(fn=cmd_simulate)

    sp = sub.add_parser("ode", help="fluid-limit path and vector field; writes ode_path.csv, field.csv, field.svg")
    _add_common(sp)
    sp.add_argument("--x0", default="1,1", help="initial concentration")
    sp.add_argument("--t-end", type=float, default=1.0, dest="t_end")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--bounds", default="0:3:0:3", help="x1min:x1max:x2min:x2max")
    sp.add_argument("--grid-n", type=int, default=20, dest="grid_n")
    sp.set_defaults(fn=cmd_ode)

    sp = sub.add_parser("boundary", help="strip exit law and never-exit bound; writes exitlaw.csv (b,analytic,empirical,stderr)")
    _add_common(sp)
    sp.add_argument("--k0", type=int, default=5)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--budget", type=int, default=2_000_000, help="jump budget per run")
    sp.set_defaults(fn=cmd_boundary)

    sp = sub.add_parser("lyapunov", help="construct the piecewise function; writes params.txt, margins.csv, vsurface.csv/svg")
    _add_common(sp, with_params=True)
    sp.add_argument("--window", type=int, default=800, help="lattice window for the surface export")
    sp.set_defaults(fn=cmd_lyapunov)

    sp = sub.add_parser("verify", help="drift sweep and interface checks; writes drift_report.csv, curvature.csv")
    _add_common(sp, with_params=True)
    sp.add_argument("--annulus", default="200:2000", help="r_min:r_max")
    sp.add_argument("--stride", type=int, default=7, help="coarse stride away from interfaces")
    sp.set_defaults(fn=cmd_verify)

    sp = sub.add_parser("measure", help="occupation measure and moment curve; writes occupation.csv, phi_moment.csv")
    _add_common(sp)
    sp.add_argument("--x0", default="0,0")
    sp.add_argument("--jumps", type=int, default=1_000_000)
    sp.set_defaults(fn=cmd_measure)

    sp = sub.add_parser("classify", help="recurrence/transience decision; writes classification.txt")
    _add_common(sp)
    sp.set_defaults(fn=cmd_classify)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return 0 if exc.code in (0, None) else 1
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
