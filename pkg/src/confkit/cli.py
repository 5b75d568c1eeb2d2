"""Command line entry point.

Every subcommand executes one module operation, optionally writes a JSON or
CSV artifact, and prints a one-line summary. Exit codes: 0 success, 1 usage
problems, 2 module errors (the error class name is printed).
"""

import argparse
import sys

import numpy as np

from . import __version__
from .analysis import SamplingPlan, TripleSampler, global_qc_profile, h_condition_test
from .demo import demo_liouville
from .distribution import (
    angle_regularity,
    frobenius_residual,
    holonomy_defect,
    lift_path,
    LiftOptions,
    parse_coframe,
)
from .errors import ConfkitError, UsageError
from .io import dump_json, load_json, write_csv
from .maps import parse_map, registry_listing
from .modulus import (
    annulus_complex,
    family_annulus,
    family_lifted_rays,
    family_rectangle,
    grid_complex,
    modulus,
    parabolicity_bound,
    radial_complex,
)
from .paths import circle as circle_path
from .paths import polyline, rectangle, segment
from .staircase import (
    StaircaseConfig,
    build_staircase,
    growth_profile,
    surface_from_dict,
)
from .util import resolve_threads


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text):
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]


def _parse_path(text):
    kind, _, rest = text.partition(":")
    vals = _floats(rest)
    if kind == "segment" and len(vals) == 4:
        return segment(vals[:2], vals[2:])
    if kind == "circle" and len(vals) == 3:
        return circle_path(vals[:2], vals[2])
    if kind == "rect" and len(vals) == 4:
        return rectangle(vals[:2], vals[2], vals[3])
    if kind == "polyline" and len(vals) >= 4 and len(vals) % 2 == 0:
        return polyline(np.asarray(vals).reshape(-1, 2))
    raise UsageError(
        f"cannot parse path '{text}' (segment:x0,y0,x1,y1 | circle:cx,cy,r | "
        "rect:x0,y0,w,h | polyline:x0,y0;x1,y1;...)"
    )


def _apply_config_file(args, argv):
    # Config file entries stand in for omitted flags; explicit flags win.
    if getattr(args, "config", None):
        data = load_json(args.config)
        for key, value in data.items():
            attr = key.replace("-", "_")
            flag = "--" + key.replace("_", "-")
            if not hasattr(args, attr):
                raise UsageError(f"config file key '{key}' is not a flag of this subcommand")
            given = any(tok == flag or tok.startswith(flag + "=") for tok in argv)
            if not given:
                setattr(args, attr, value)
    return args


def _write(args, payload=None, rows=None, header=None):
    if not args.out:
        return
    fmt = getattr(args, "format", None)
    if fmt == "csv" or (fmt is None and str(args.out).endswith(".csv")):
        if rows is None:
            raise UsageError("this subcommand has no CSV representation")
        write_csv(args.out, header, rows)
    else:
        dump_json(payload, args.out)


def _add_common(sub, out_default=None):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=None)
    sub.add_argument("--out", default=out_default)
    sub.add_argument("--format", choices=["json", "csv"], default=None)
    sub.add_argument("--config", default=None, help="JSON file with flag defaults")


def _build_parser():
    parser = _Parser(prog="confkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"confkit {__version__}")
    subs = parser.add_subparsers(dest="command")

    sub = subs.add_parser("list-maps", help="registry listing as JSON")
    _add_common(sub)

    sub = subs.add_parser("analyze-map", help="sampled eccentricity profile")
    sub.add_argument("--map", required=True)
    sub.add_argument("--samples", type=int, default=1000)
    sub.add_argument("--box", default="-10,10", help="low,high")
    sub.add_argument("--shells", default=None, help="r1,r2,... spherical shells")
    _add_common(sub)

    sub = subs.add_parser("h-condition", help="1-d equal-spacing distortion test")
    sub.add_argument("--map", required=True)
    sub.add_argument("--triple", action="append", default=None, help="a,b,c (repeatable)")
    sub.add_argument("--range", default="-10,10")
    sub.add_argument("--spacing", default="0.1,10")
    sub.add_argument("--count", type=int, default=200)
    sub.add_argument("--cap", type=float, default=1e3)
    _add_common(sub)

    sub = subs.add_parser("check-integrability", help="plane-field integrability residuals")
    sub.add_argument("--map", default=None)
    sub.add_argument("--coframe", default=None, help="dz | contact:<eps>")
    sub.add_argument("--points", type=int, default=100)
    sub.add_argument("--box", default="-2,2")
    _add_common(sub)

    sub = subs.add_parser("lift-path", help="horizontal lift of a base path")
    sub.add_argument("--map", required=True)
    sub.add_argument("--path", required=True)
    sub.add_argument("--start", required=True, help="x1,...,xm")
    sub.add_argument("--steps", type=int, default=None)
    sub.add_argument("--step", type=float, default=None, help="arc-length step")
    sub.add_argument("--r-max", type=float, default=1e6)
    sub.add_argument("--lift-tol", type=float, default=1e-8)
    _add_common(sub)

    sub = subs.add_parser("holonomy", help="endpoint defect of a lifted loop")
    sub.add_argument("--map", default=None)
    sub.add_argument("--coframe", default=None)
    sub.add_argument("--loop", required=True)
    sub.add_argument("--start", default=None, help="x1,...,xm")
    sub.add_argument("--steps", type=int, default=None)
    _add_common(sub)

    sub = subs.add_parser("angle-regularity", help="plane-field regularity scale per radius")
    sub.add_argument("--map", required=True)
    sub.add_argument("--radii", default="1,5,10")
    sub.add_argument("--probes", type=int, default=300)
    sub.add_argument("--eps-angle", type=float, default=0.1)
    _add_common(sub)

    sub = subs.add_parser("build-staircase", help="sweep the staircase surface")
    sub.add_argument("--map", required=True)
    sub.add_argument("--segment", required=True, help="x0,y0,x1,y1")
    sub.add_argument("--start", required=True, help="x1,...,xm")
    sub.add_argument("--max-height", type=float, default=1.0)
    sub.add_argument("--k-factor", type=float, default=2.0)
    sub.add_argument("--grid", default="16,8", help="n_along,n_up")
    sub.add_argument("--h-init", type=float, default=None)
    _add_common(sub, out_default="surface.json")

    sub = subs.add_parser("area-growth", help="intrinsic growth of a built surface")
    sub.add_argument("--surface", required=True)
    sub.add_argument("--radii", required=True, help="r1,r2,...")
    sub.add_argument("--seed-segment", default=None, help="x0,y0,x1,y1 in image coords")
    _add_common(sub, out_default="growth.csv")

    sub = subs.add_parser("estimate-modulus", help="discrete p-modulus upper bound")
    sub.add_argument("--complex", required=True,
                     help="grid | annulus | path to surface.json")
    sub.add_argument("--family", required=True, choices=["rect", "annulus", "lifted"])
    sub.add_argument("--p", type=float, default=2.0)
    sub.add_argument("--rect", default="1,1", help="width,height of the grid rectangle")
    sub.add_argument("--grid", default="64,64", help="nx,ny (or nr,ntheta for annulus)")
    sub.add_argument("--annulus", default="1,2.718281828459045", help="r_in,r_out")
    sub.add_argument("--side", choices=["lr", "tb"], default="lr")
    sub.add_argument("--k", type=int, default=4, help="staircase perturbations per crossing")
    sub.add_argument("--truncate", type=float, default=None, help="geodesic truncation radius")
    _add_common(sub, out_default="modulus.json")

    sub = subs.add_parser("parabolicity", help="alpha/(r ln r) admissibility table")
    sub.add_argument("--surface", default=None)
    sub.add_argument("--complex", default=None, help="flat:R,nr,ntheta | hyperbolic:R,nr,ntheta")
    sub.add_argument("--alphas", default="", help="a1,a2,...")
    sub.add_argument("--cutoffs", required=True, help="R1,R2,...")
    sub.add_argument("--r0", type=float, default=float(np.e))
    sub.add_argument("--threshold", type=float, default=0.1)
    _add_common(sub, out_default="parabolicity.csv")

    sub = subs.add_parser("demo-liouville", help="end-to-end screen + staircase + modulus run")
    sub.add_argument("--map", required=True)
    sub.add_argument("--window", type=float, default=4.0)
    sub.add_argument("--segment", default=None, help="x0,y0,x1,y1 override")
    sub.add_argument("--start", default=None, help="x1,...,xm override")
    _add_common(sub, out_default="liouville_report.json")
    return parser


def _cmd_list_maps(args):
    listing = registry_listing()
    _write(args, payload=listing)
    print(f"confkit: {len(listing)} registry maps")
    return 0


def _cmd_analyze_map(args):
    spec = parse_map(args.map)
    if args.shells:
        plan = SamplingPlan(kind="shell", count=args.samples,
                            shells=tuple(_floats(args.shells)), seed=args.seed)
    else:
        low, high = _floats(args.box)
        plan = SamplingPlan(kind="box", count=args.samples, low=low, high=high, seed=args.seed)
    profile = global_qc_profile(spec, plan)
    payload = profile.to_dict()
    payload["seed"] = args.seed
    _write(args, payload=payload)
    print(f"confkit: {spec.name} K_max={profile.k_max:g} "
          f"rank_deficient={profile.rank_deficient_count}/{profile.samples_in_domain}")
    return 0


def _cmd_h_condition(args):
    spec = parse_map(args.map)
    if args.triple:
        triples = np.array([_floats(t) for t in args.triple])
        sampler = TripleSampler(triples=triples)
    else:
        low, high = _floats(args.range)
        s_lo, s_hi = _floats(args.spacing)
        sampler = TripleSampler(low=low, high=high, spacing_low=s_lo, spacing_high=s_hi,
                                count=args.count, seed=args.seed)
    report = h_condition_test(spec, sampler, cap=args.cap)
    _write(args, payload=report.to_dict())
    print(f"confkit: {spec.name} h={report.h_estimate:g} unbounded={report.unbounded_flag}")
    return 0


def _source_from_args(args):
    if args.coframe:
        return parse_coframe(args.coframe)
    if args.map:
        return parse_map(args.map)
    raise UsageError("need --map or --coframe")


def _cmd_check_integrability(args):
    src = _source_from_args(args)
    low, high = _floats(args.box)
    rng = np.random.default_rng(args.seed)
    residuals = []
    points = []
    spec = src.base_map if hasattr(src, "base_map") else src
    while len(residuals) < args.points:
        x = rng.uniform(low, high, size=3)
        if not spec.in_domain(x):
            continue
        residuals.append(frobenius_residual(src, x))
        points.append(x.tolist())
    arr = np.asarray(residuals)
    payload = {
        "source": getattr(src, "name", args.map or args.coframe),
        "points": len(residuals),
        "residual_min": float(arr.min()),
        "residual_max": float(arr.max()),
        "residual_mean": float(arr.mean()),
        "samples": [{"point": p, "residual": r} for p, r in zip(points, residuals)],
        "seed": args.seed,
    }
    _write(args, payload=payload,
           rows=[(i, *p, r) for i, (p, r) in enumerate(zip(points, residuals))],
           header=["index", "x1", "x2", "x3", "residual"])
    print(f"confkit: residual in [{arr.min():.3e}, {arr.max():.3e}] over {len(arr)} points")
    return 0


def _cmd_lift_path(args):
    spec = parse_map(args.map)
    base = _parse_path(args.path)
    start = np.asarray(_floats(args.start))
    opts = LiftOptions(step=args.step, lift_tol=args.lift_tol, r_max=args.r_max)
    lifted = lift_path(spec, base, start, opts=opts, n_steps=args.steps)
    rows = [(t, *pt) for t, pt in zip(lifted.ts, lifted.points)]
    header = ["t"] + [f"x{i + 1}" for i in range(spec.m)]
    payload = {
        "map": spec.name,
        "status": lifted.status,
        "t_stop": lifted.t_stop,
        "samples": [{"t": float(t), "point": pt.tolist()} for t, pt in zip(lifted.ts, lifted.points)],
    }
    _write(args, payload=payload, rows=rows, header=header)
    print(f"confkit: lift {lifted.status} with {len(lifted.ts)} samples")
    return 0


def _cmd_holonomy(args):
    src = _source_from_args(args)
    loop = _parse_path(args.loop)
    if args.start:
        start = np.asarray(_floats(args.start))
    else:
        start = np.concatenate([loop.point(0.0), [0.0]])
    defect = holonomy_defect(src, loop, start, n_steps=args.steps)
    payload = {
        "source": getattr(src, "name", args.map or args.coframe),
        "loop": loop.description,
        "start": start.tolist(),
        "defect": defect.tolist(),
        "defect_norm": float(np.linalg.norm(defect)),
    }
    _write(args, payload=payload)
    print(f"confkit: holonomy defect {np.array2string(defect, precision=6)}")
    return 0


def _cmd_angle_regularity(args):
    spec = parse_map(args.map)
    table = angle_regularity(spec, _floats(args.radii), probe_count=args.probes,
                             eps_angle=args.eps_angle, seed=args.seed)
    payload = {
        "map": spec.name,
        "eps_angle": args.eps_angle,
        "table": [{"radius": r, "delta": d} for r, d in table],
        "seed": args.seed,
    }
    _write(args, payload=payload, rows=table, header=["radius", "delta"])
    summary = ", ".join(f"{r:g}:{d:g}" for r, d in table)
    print(f"confkit: delta(r) table {summary}")
    return 0


def _cmd_build_staircase(args):
    spec = parse_map(args.map)
    seg = _floats(args.segment)
    n_along, n_up = (int(v) for v in _floats(args.grid))
    cfg = StaircaseConfig(
        base_segment=((seg[0], seg[1]), (seg[2], seg[3])),
        start_lift=tuple(_floats(args.start)),
        max_height=args.max_height,
        k_factor=args.k_factor,
        n_along=n_along,
        n_up=n_up,
        h_init=args.h_init,
        threads=resolve_threads(args.threads),
    )
    surface = build_staircase(spec, cfg)
    _write(args, payload=surface.to_dict())
    print(f"confkit: staircase {surface.status} with {len(surface.steps)} steps, "
          f"top height {surface.heights[-1]:g}")
    return 0


def _cmd_area_growth(args):
    surface = surface_from_dict(load_json(args.surface))
    seed_segment = None
    if args.seed_segment:
        vals = _floats(args.seed_segment)
        seed_segment = ((vals[0], vals[1]), (vals[2], vals[3]))
    profile = growth_profile(surface, _floats(args.radii), seed_segment=seed_segment)
    _write(args, payload=profile.to_dict(), rows=profile.to_rows(), header=["r", "L", "A"])
    print(f"confkit: area exponent {profile.area_exponent:.3f}, "
          f"length exponent {profile.length_exponent:.3f}")
    return 0


def _cmd_estimate_modulus(args):
    if args.family == "rect":
        if args.complex != "grid":
            raise UsageError("family rect needs --complex grid")
        width, height = _floats(args.rect)
        nx, ny = (int(v) for v in _floats(args.grid))
        fam = family_rectangle(grid_complex(width, height, nx, ny), args.side,
                               k=args.k, seed=args.seed)
    elif args.family == "annulus":
        if args.complex != "annulus":
            raise UsageError("family annulus needs --complex annulus")
        r_in, r_out = _floats(args.annulus)
        n_r, n_theta = (int(v) for v in _floats(args.grid))
        fam = family_annulus(annulus_complex(r_in, r_out, n_r, n_theta))
    else:
        surface = surface_from_dict(load_json(args.complex))
        fam = family_lifted_rays(surface, truncate_radius=args.truncate)
    est = modulus(fam, p=args.p)
    payload = est.to_dict()
    payload["family"] = fam.description
    payload["curves"] = len(fam.curves)
    payload["seed"] = args.seed
    _write(args, payload=payload)
    print(f"confkit: modulus upper bound {est.value:.6g} (p={args.p:g}, "
          f"{len(fam.curves)} curves, converged={est.converged})")
    return 0


def _cmd_parabolicity(args):
    if args.surface:
        source = surface_from_dict(load_json(args.surface))
    elif args.complex:
        kind, _, rest = args.complex.partition(":")
        vals = _floats(rest)
        if kind not in ("flat", "hyperbolic") or len(vals) != 3:
            raise UsageError("--complex must be flat:R,nr,ntheta or hyperbolic:R,nr,ntheta")
        source = radial_complex(vals[0], int(vals[1]), int(vals[2]), metric=kind)
    else:
        raise UsageError("need --surface or --complex")
    alphas = _floats(args.alphas) if args.alphas else []
    report = parabolicity_bound(source, alphas=alphas, cutoffs=_floats(args.cutoffs),
                                r0=args.r0, threshold=args.threshold)
    payload = {
        "verdict": report.verdict,
        "threshold": report.threshold,
        "r0": report.r0,
        "rows": [
            {"alpha": r.alpha, "cutoff": r.cutoff, "admissible": r.admissible,
             "M_upper": r.m_upper}
            for r in report.rows
        ],
    }
    _write(args, payload=payload, rows=report.to_rows(),
           header=["alpha", "cutoff", "admissible", "M_upper"])
    print(f"confkit: verdict {report.verdict}")
    return 0


def _cmd_demo(args):
    spec = parse_map(args.map)
    segment_override = None
    start_override = None
    if args.segment:
        vals = _floats(args.segment)
        segment_override = ((vals[0], vals[1]), (vals[2], vals[3]))
    if args.start:
        start_override = tuple(_floats(args.start))
    report = demo_liouville(spec, window=args.window, seed=args.seed,
                            segment=segment_override, start=start_override,
                            threads=resolve_threads(args.threads))
    _write(args, payload=report)
    print(f"confkit: demo {report['status']} for {spec.name}; {report.get('note', '')}")
    return 0


_HANDLERS = {
    "list-maps": _cmd_list_maps,
    "analyze-map": _cmd_analyze_map,
    "h-condition": _cmd_h_condition,
    "check-integrability": _cmd_check_integrability,
    "lift-path": _cmd_lift_path,
    "holonomy": _cmd_holonomy,
    "angle-regularity": _cmd_angle_regularity,
    "build-staircase": _cmd_build_staircase,
    "area-growth": _cmd_area_growth,
    "estimate-modulus": _cmd_estimate_modulus,
    "parabolicity": _cmd_parabolicity,
    "demo-liouville": _cmd_demo,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("missing subcommand")
        args = _apply_config_file(args, argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfkitError as exc:
        print(f"error[{exc.name}]: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
