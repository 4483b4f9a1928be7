"""Command-line front end: every solver behind one reproducible interface.

Eight subcommands (asym, sphere, collins, spectral, window, simulate,
compare, norms) share the output conventions: a versioned JSON record
{version, command, config, results} with the fully resolved configuration
echoed back, or CSV with a header row and the same config in a leading
comment line.  Exit codes: 0 success, 2 bad domain input, 3 solver failure.

Units are the caller's consistent length/time system throughout; the one
exception is `asym --shape arrival --conc-molar`, which converts mol/L to
a number density (the regime the order-of-magnitude estimate is quoted in).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .asymptotics import (
    MediumSpec,
    WindowEllipse,
    forward_rate,
    mean_arrival_time,
    mfpt_circular,
    mfpt_composite_channel,
    mfpt_elliptic,
    mfpt_sphere_two_term,
    mfpt_squeezed,
    mfpt_squeezed_by_area,
)
from .collins import CollinsConfig, double_integral_check, operator_norm, solve_b0
from .errors import DomainError, SolverError
from .sim import (
    BallWithCap,
    BoxWithEllipticWindow,
    CylinderAxial,
    SimConfig,
    compare_with_theory,
    result_record,
    simulate,
)
from .spectral import average_mfpt, reconstruct_mfpt, solve_dual_series
from .window import build_ellipse_mesh, solve_window_ie, verify_constant_potential

SCHEMA_VERSION = "1"

AVOGADRO = 6.02214076e23
MOLAR_TO_PER_M3 = AVOGADRO * 1e3  # mol/L -> particles per m^3


def _float_list(text: str) -> list[float]:
    vals = [float(tok) for tok in text.split(",") if tok.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("expected a comma-separated number list")
    return vals


def _coerce(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _config_echo(args, extra=None) -> dict:
    skip = {"func", "command", "output", "format"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    if extra:
        cfg.update(extra)
    return cfg


# ---------------------------------------------------------------- commands


def _cmd_asym(args):
    med_needed = args.shape not in ("arrival",)
    if med_needed:
        med = MediumSpec(volume=args.V, diffusion=args.D)
    if args.shape == "circle":
        res = mfpt_circular(med, args.a)
    elif args.shape == "ellipse":
        if args.b is None:
            raise DomainError("ellipse needs --b")
        res = mfpt_elliptic(med, WindowEllipse(args.a, args.b))
    elif args.shape == "squeezed":
        if args.e is None:
            raise DomainError("squeezed needs --e")
        if args.area is not None:
            res = mfpt_squeezed_by_area(med, args.area, args.e)
        else:
            b = args.a * np.sqrt(1.0 - args.e**2)
            res = mfpt_squeezed(med, WindowEllipse(args.a, b))
    elif args.shape == "composite":
        if args.L is None:
            raise DomainError("composite needs --L")
        res = mfpt_composite_channel(args.V, args.D, args.a, args.L)
    elif args.shape == "arrival":
        if (args.conc_molar is None) == (args.conc_per_m3 is None):
            raise DomainError(
                "arrival needs exactly one of --conc-molar / --conc-per-m3"
            )
        C = (
            args.conc_molar * MOLAR_TO_PER_M3
            if args.conc_molar is not None
            else args.conc_per_m3
        )
        return _config_echo(args, {"number_density": C}), {
            "shape": "arrival",
            "value": mean_arrival_time(args.D, args.a, C),
            "rate": forward_rate(args.D, args.a, C),
        }
    return _config_echo(args), {
        "shape": args.shape,
        "value": res.value,
        "regime": res.regime,
        "terms": res.correction_terms,
    }


def _cmd_sphere(args):
    rows = []
    for ratio in args.ratios:
        a = ratio * args.R
        two = mfpt_sphere_two_term(args.R, a, args.D)
        rows.append(
            {
                "a_over_R": ratio,
                "a": a,
                "leading": two.correction_terms["leading"],
                "two_term": two.value,
            }
        )
    return _config_echo(args), rows


def _cmd_collins(args):
    cfg = CollinsConfig(R=args.R, eps=args.eps, n_quad=args.nquad)
    res = solve_b0(cfg)
    a = args.eps * args.R
    volume = 4.0 * np.pi * args.R**3 / 3.0
    excess = res.b0 * 4.0 * a / volume - 1.0
    ratio = excess / (args.eps * np.log(1.0 / args.eps)) if args.eps < 1 else None
    results = {
        "b0": res.b0,
        "mfpt_center": res.mfpt_center,
        "correction_factor": res.correction_factor,
        "extrapolated": res.extrapolated,
        "operator_norm": operator_norm(cfg),
        "two_term_excess": excess,
        "two_term_ratio": ratio,
        "double_integral_ratio": (
            double_integral_check(args.eps) if args.eps < 0.5 else None
        ),
    }
    return _config_echo(args), results


def _cmd_spectral(args):
    sol = solve_dual_series(args.R, args.eps, N=args.N, M=args.M)
    results = {
        "a0": float(sol.coeffs[0]),
        "average_analytic": average_mfpt(sol, method="analytic"),
        "average_quadrature": average_mfpt(sol, method="quadrature"),
        "center": reconstruct_mfpt(sol, 0.0, 0.0),
        "residual_dirichlet": sol.residual_dirichlet,
        "residual_neumann": sol.residual_neumann,
    }
    return _config_echo(args), results


def _cmd_window(args):
    mesh = build_ellipse_mesh(args.a, args.b, args.n)
    sol = solve_window_ie(mesh, args.V, args.D)
    from .numerics import elliptic_K  # local import keeps module deps obvious

    e = np.sqrt(1.0 - (args.b / args.a) ** 2)
    exact = args.V * float(elliptic_K(e)) / (2.0 * np.pi * args.D * args.a)
    rep = verify_constant_potential(args.a, args.b, n_check=args.ncheck, n=args.n)
    results = {
        "C0": sol.C0,
        "total_flux": sol.total_flux,
        "n_elements": int(mesh.areas.size),
        "exact_leading": exact,
        "rel_err": sol.C0 / exact - 1.0,
        "constant_potential_max_dev": rep.max_deviation,
    }
    return _config_echo(args), results


def _geometry_from_args(args):
    if args.geometry == "ball":
        if args.R is None or args.eps is None:
            raise DomainError("ball needs --R and --eps")
        return BallWithCap(R=args.R, eps=args.eps)
    if args.geometry == "cylinder":
        if args.L is None or args.radius is None:
            raise DomainError("cylinder needs --L and --radius")
        return CylinderAxial(L=args.L, radius=args.radius)
    if None in (args.Lx, args.Ly, args.Lz, args.a, args.b):
        raise DomainError("box needs --Lx --Ly --Lz --a --b")
    return BoxWithEllipticWindow(
        Lx=args.Lx, Ly=args.Ly, Lz=args.Lz, a=args.a, b=args.b
    )


def _sim_config(args) -> SimConfig:
    if args.start == "uniform":
        initial = "uniform"
    else:
        initial = tuple(float(tok) for tok in args.start.split(","))
    return SimConfig(
        geometry=_geometry_from_args(args),
        D=args.D,
        dt=args.dt,
        n_paths=args.paths,
        seed=args.seed,
        max_steps=args.max_steps,
        initial=initial,
    )


def _cmd_simulate(args):
    cfg = _sim_config(args)
    res = simulate(cfg)
    return _config_echo(args, {"dt": cfg.dt}), result_record(cfg, res)


def _cmd_compare(args):
    cfg = _sim_config(args)
    cmp = compare_with_theory(cfg)
    results = {
        "mc_mean": cmp.result.mean,
        "mc_stderr": cmp.result.stderr,
        "leading": cmp.leading,
        "two_term": cmp.two_term,
        "gap_leading": cmp.gap_leading,
        "gap_two_term": cmp.gap_two_term,
    }
    g = cfg.geometry
    if isinstance(g, BallWithCap):
        # volume-averaged MFPT from both ball solvers for the joint table
        b0 = solve_b0(CollinsConfig(R=g.R, eps=g.eps, n_quad=args.nquad)).b0
        sol = solve_dual_series(g.R, g.eps, N=args.N)
        offset = g.R**2 / 15.0
        results["collins"] = (b0 + offset) / cfg.D
        results["spectral"] = (float(sol.coeffs[0]) + offset) / cfg.D
    elif isinstance(g, BoxWithEllipticWindow):
        mesh = build_ellipse_mesh(g.a, g.b, args.n)
        results["window_bie"] = solve_window_ie(mesh, g.volume(), cfg.D).C0
    return _config_echo(args, {"dt": cfg.dt}), results


def _cmd_norms(args):
    rows = []
    for eps in args.eps_list:
        cfg = CollinsConfig(R=args.R, eps=eps, n_quad=args.nquad)
        norm = operator_norm(cfg)
        bound = np.sqrt(30.0) / (2.0 * np.pi) * eps * np.log(1.0 / eps)
        rows.append(
            {
                "eps": eps,
                "operator_norm": norm,
                "bound": bound,
                "within_bound": bool(norm <= bound),
            }
        )
    return _config_echo(args), rows


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="escapetime",
        description="Narrow escape MFPT toolkit: formulas, solvers, simulation.",
    )
    p.add_argument(
        "--version", action="version", version=f"escapetime {__version__}"
    )
    out = argparse.ArgumentParser(add_help=False)
    out.add_argument(
        "--output",
        default=None,
        help="output file (default stdout); relative paths resolve under "
        "$ESCAPETIME_OUTDIR when that is set",
    )
    out.add_argument("--format", choices=("json", "csv"), default="json")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("asym", parents=[out], help="closed-form asymptotics")
    q.add_argument(
        "--shape",
        required=True,
        choices=("circle", "ellipse", "squeezed", "composite", "arrival"),
    )
    q.add_argument("--V", type=float, default=1.0)
    q.add_argument("--D", type=float, default=1.0)
    q.add_argument("--a", type=float, required=True)
    q.add_argument("--b", type=float, default=None)
    q.add_argument("--e", type=float, default=None)
    q.add_argument("--area", type=float, default=None)
    q.add_argument("--L", type=float, default=None)
    q.add_argument("--conc-molar", type=float, default=None)
    q.add_argument("--conc-per-m3", type=float, default=None)
    q.set_defaults(func=_cmd_asym)

    q = sub.add_parser("sphere", parents=[out], help="two-term ball formula sweep")
    q.add_argument("--R", type=float, default=1.0)
    q.add_argument("--D", type=float, default=1.0)
    q.add_argument(
        "--ratios", type=_float_list, default=[0.01, 0.02, 0.05, 0.1, 0.2]
    )
    q.set_defaults(func=_cmd_sphere)

    q = sub.add_parser("collins", parents=[out], help="Fredholm solver on the ball")
    q.add_argument("--R", type=float, default=1.0)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--nquad", type=int, default=200)
    q.set_defaults(func=_cmd_collins)

    q = sub.add_parser("spectral", parents=[out], help="dual-series solver")
    q.add_argument("--R", type=float, default=1.0)
    q.add_argument("--eps", type=float, required=True)
    q.add_argument("--N", type=int, default=64)
    q.add_argument("--M", type=int, default=None)
    q.set_defaults(func=_cmd_spectral)

    q = sub.add_parser("window", parents=[out], help="planar window flux solver")
    q.add_argument("--a", type=float, required=True)
    q.add_argument("--b", type=float, required=True)
    q.add_argument("--n", type=int, default=24)
    q.add_argument("--V", type=float, default=1.0)
    q.add_argument("--D", type=float, default=1.0)
    q.add_argument("--ncheck", type=int, default=8)
    q.set_defaults(func=_cmd_window)

    geo = argparse.ArgumentParser(add_help=False)
    geo.add_argument("--geometry", required=True, choices=("ball", "cylinder", "box"))
    geo.add_argument("--R", type=float, default=None)
    geo.add_argument("--eps", type=float, default=None)
    geo.add_argument("--L", type=float, default=None)
    geo.add_argument("--radius", type=float, default=None)
    geo.add_argument("--Lx", type=float, default=None)
    geo.add_argument("--Ly", type=float, default=None)
    geo.add_argument("--Lz", type=float, default=None)
    geo.add_argument("--a", type=float, default=None)
    geo.add_argument("--b", type=float, default=None)
    geo.add_argument("--D", type=float, default=1.0)
    geo.add_argument("--dt", type=float, default=None)
    geo.add_argument("--paths", type=int, default=10_000)
    geo.add_argument("--seed", type=int, default=0)
    geo.add_argument("--max-steps", type=int, default=100_000_000)
    geo.add_argument("--start", default="uniform", help="'uniform' or 'x,y,z'")

    q = sub.add_parser("simulate", parents=[out, geo], help="Monte Carlo MFPT")
    q.set_defaults(func=_cmd_simulate)

    q = sub.add_parser(
        "compare", parents=[out, geo], help="joint MC / formula / solver table"
    )
    q.add_argument("--nquad", type=int, default=200)
    q.add_argument("--N", type=int, default=64)
    q.add_argument("--n", type=int, default=24)
    q.set_defaults(func=_cmd_compare)

    q = sub.add_parser("norms", parents=[out], help="operator norm vs bound sweep")
    q.add_argument("--R", type=float, default=1.0)
    q.add_argument("--eps-list", type=_float_list, default=[0.01, 0.05])
    q.add_argument("--nquad", type=int, default=200)
    q.set_defaults(func=_cmd_norms)
    return p


# ------------------------------------------------------------------ output


def _resolve_output(path: str | None):
    if path is None:
        return None
    outdir = os.environ.get("ESCAPETIME_OUTDIR")
    if outdir and not os.path.isabs(path):
        return os.path.join(outdir, path)
    return path


def _write_csv(record: dict, fh) -> None:
    rows = record["results"]
    if isinstance(rows, dict):
        rows = [rows]
    flat = []
    for row in rows:
        flat.append(
            {
                k: (json.dumps(v, default=_coerce) if isinstance(v, (dict, list)) else v)
                for k, v in row.items()
            }
        )
    header = {
        "version": record["version"],
        "command": record["command"],
        "config": record["config"],
    }
    fh.write(f"# escapetime {json.dumps(header, default=_coerce)}\n")
    writer = csv.DictWriter(fh, fieldnames=list(flat[0].keys()))
    writer.writeheader()
    writer.writerows(flat)


def _emit(record: dict, args) -> None:
    path = _resolve_output(args.output)
    if args.format == "json":
        text = json.dumps(record, indent=2, default=_coerce) + "\n"
        if path is None:
            sys.stdout.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)
    else:
        if path is None:
            _write_csv(record, sys.stdout)
        else:
            with open(path, "w", newline="") as fh:
                _write_csv(record, fh)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, results = args.func(args)
    except ValueError as exc:  # DomainError included
        print(f"error: domain: {exc}", file=sys.stderr)
        return 2
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"error: solver: {exc}", file=sys.stderr)
        return 3
    record = {
        "version": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "results": results,
    }
    _emit(record, args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
