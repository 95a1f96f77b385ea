"""Command-line interface: ``steklov <command> ...``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .eigensolver import evaluate_field, normalized_eigenvalue, solve_spectrum, steklov_spectrum
from .exceptions import NumericalError, ShapeError, SteklovError
from .geometry import FourierShape, all_modes, area, build_grid, check_node_count, parse_mode, perimeter
from .nystrom import assemble_pair
from .optimizer import ProblemSpec, interp_seed, optimize_restarts, verify_conjecture
from .shapegrad import objective_gradient

EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_log = logging.getLogger("steklov")


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi, *step = (int(v) for v in part.split(":"))
            out.extend(range(lo, hi + 1, step[0] if step else 1))
        elif part:
            out.append(int(part))
    return out


def _rng_seed(args) -> int | None:
    if args.rng_seed is not None:
        return args.rng_seed
    env = os.environ.get("STEKLOV_RNG_SEED")
    return int(env) if env else None


def _map(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _num(v) -> str:
    """Shortest round-tripping text for a float."""
    return repr(float(v))


def _manifest_for(out, suffix=".manifest.json"):
    return None if out is None else Path(str(out) + suffix)


# -- spectrum ---------------------------------------------------------------


def cmd_spectrum(args) -> list:
    shape = io.load_shape(args.shape)
    check_node_count(args.n)
    pair = assemble_pair(build_grid(shape, args.n))
    spectrum = solve_spectrum(pair, args.count)
    fmt = args.format or ("csv" if str(args.out or "").endswith(".csv") else "json")
    io.write_spectrum(spectrum, args.out, fmt, args.rel_tol)
    outputs = [args.out] if args.out else []
    if args.dump_operators:
        outputs += io.write_operators(pair, args.dump_operators)
    return outputs


# -- converge ---------------------------------------------------------------


def _lambdas(task):
    shape, n, count = task
    return steklov_spectrum(shape, n, count).lambdas


def cmd_converge(args) -> list:
    shape = io.load_shape(args.shape)
    ns = _int_list(args.n_list)
    for n in ns + [args.ref_n]:
        check_node_count(n)
    if args.ref_n <= max(ns):
        raise UsageError("--ref-n must exceed every entry of --n-list")
    results = _map(_lambdas, [(shape, n, args.count) for n in ns + [args.ref_n]], args.jobs)
    ref = results[-1]
    rows = [
        [n, j, _num(abs(lam[j] - ref[j]))]
        for n, lam in zip(ns, results[:-1])
        for j in range(args.count)
    ]
    io.write_rows(args.out, ["n", "j", "abs_error"], rows)
    return [args.out] if args.out else []


# -- optimize ---------------------------------------------------------------

_SPEC_KEYS = {f for f in ProblemSpec.__dataclass_fields__}


def cmd_optimize(args) -> list:
    config = io.load_config(args.config) if args.config else {}
    for key in ("p", "mode", "m_window", "m_max", "n_nodes", "max_iters", "step_tol", "stat_tol", "subproblem"):
        value = getattr(args, key)
        if value is not None:
            config[key] = value
    seed_source = args.seed or config.pop("seed", None) or "random"
    restarts = args.restarts if args.restarts is not None else config.pop("restarts", None)
    config.pop("seed", None)
    config.pop("restarts", None)
    unknown = set(config) - _SPEC_KEYS
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    if "p" not in config:
        raise UsageError("--p is required")
    try:
        spec = ProblemSpec(**config)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc

    rng = np.random.default_rng(_rng_seed(args))
    seeds = None
    if seed_source == "interp":
        seeds = [interp_seed(spec.p)]
    elif seed_source != "random":
        seeds = [io.load_shape(seed_source)]
    elif spec.mode == "symmetric":
        seeds = [interp_seed(spec.p)]
    n_restarts = restarts if restarts is not None else (5 if spec.mode == "full" else 1)
    best, runs = optimize_restarts(spec, n_restarts, rng=rng, seeds=seeds)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    result = best.to_dict()
    result["restarts"] = [{"status": r.status, "value": r.value} for r in runs]
    result["verification"] = verify_conjecture(best)

    (out / "run.json").write_text(json.dumps(result, indent=2, default=float) + "\n")
    io.write_rows(
        out / "history.csv",
        ["iter", "min_window_Lambda", "trust_radius", "accepted"],
        [[h["iter"], _num(h["value"]), _num(h["radius"]), int(h["accepted"])] for h in best.history],
    )
    io.save_shape(best.shape, out / "shape.json")
    print(f"p={spec.p} status={best.status} Lambda_p={best.value:.11f}", file=sys.stderr)
    return [out / "run.json", out / "history.csv", out / "shape.json"]


# -- field ------------------------------------------------------------------


def cmd_field(args) -> list:
    shape = io.load_shape(args.shape)
    try:
        W, H = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        raise UsageError("--grid must look like 100x80")
    if args.bbox:
        try:
            xmin, xmax, ymin, ymax = (float(v) for v in args.bbox.split(","))
        except ValueError:
            raise UsageError("--bbox must be xmin,xmax,ymin,ymax")
    else:
        r = 1.1 * float(np.max(build_grid(shape, 256).rho))
        xmin, xmax, ymin, ymax = -r, r, -r, r
    count = max(args.j + 1, 2)
    n = args.n or max(128, 3 * count + (3 * count) % 2)
    spectrum = steklov_spectrum(shape, n, count)
    X, Y = np.meshgrid(np.linspace(xmin, xmax, W), np.linspace(ymin, ymax, H))
    pts = np.column_stack([X.ravel(), Y.ravel()])
    values = evaluate_field(spectrum, args.j, pts)
    grid = spectrum.grid
    tol = grid.h * grid.jac.max()
    near = np.zeros(pts.shape[0], bool)
    for start in range(0, pts.shape[0], 4096):
        d = pts[start:start + 4096, None, :] - grid.x[None, :, :]
        near[start:start + 4096] = np.sqrt(np.einsum("ijk,ijk->ij", d, d).min(axis=1)) < tol
    rows = [[_num(x), _num(y), _num(v), int(f)] for (x, y), v, f in zip(pts, values, near)]
    io.write_rows(args.out, ["x", "y", "u", "near_boundary"], rows)
    return [args.out] if args.out else []


# -- sweep-interp -----------------------------------------------------------


def _interp_row(task):
    p, n = task
    shape = interp_seed(p)
    count = p + 2
    n = n or max(128, 12 * 3 * p, 3 * count + (3 * count) % 2)
    n += n % 2
    lam = steklov_spectrum(shape, n, count).lambdas
    Lam = lam[p] * math.sqrt(area(shape))
    fit = 0.5801 + 1.1765 * p
    ball = math.ceil(p / 2) * math.sqrt(math.pi)
    ratio = perimeter(shape) / math.sqrt(area(shape))
    return [p, _num(Lam), _num(ratio), _num(fit), _num((Lam - fit) / Lam), _num(ball), _num(0.4436 + 0.8862 * p)]


SWEEP_HEADER = ["p", "Lambda_p", "perimeter_over_sqrt_area", "fit", "fit_residual", "ball_Lambda_p", "ball_fit"]


def cmd_sweep_interp(args) -> list:
    ps = _int_list(args.p_range)
    if not ps or min(ps) < 2 or max(ps) > 60:
        raise UsageError("--p-range must lie within 2..60")
    rows = _map(_interp_row, [(p, args.n) for p in ps], args.jobs)
    io.write_rows(args.out, SWEEP_HEADER, rows)
    return [args.out] if args.out else []


# -- grad-check -------------------------------------------------------------


def grad_check_rows(shape: FourierShape, j: int, modes, h: float, n: int):
    count = j + 3
    spectrum = steklov_spectrum(shape, n, count)
    report = objective_gradient(shape, spectrum, j, modes)
    rows = []
    m = max(shape.m, max(k for _, k in report.modes))
    base = shape.padded(m).to_vector()
    for (kind, k), g in zip(report.modes, report.dLambda):
        i = k if kind == "cos" else m + k
        vals = []
        for sgn in (1, -1):
            x = base.copy()
            x[i] += sgn * h
            s = FourierShape.from_vector(x)
            vals.append(normalized_eigenvalue(s, steklov_spectrum(s, n, count), j))
        fd = (vals[0] - vals[1]) / (2 * h)
        rel = abs(g - fd) / max(abs(fd), abs(g), 1e-300) if (g or fd) else 0.0
        rows.append([f"{'a' if kind == 'cos' else 'b'}{k}", _num(g), _num(fd), _num(rel), int(report.cluster_warning)])
    return rows


def cmd_grad_check(args) -> list:
    shape = io.load_shape(args.shape)
    try:
        modes = [parse_mode(m) for m in args.modes.split(",")] if args.modes else None
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if modes is None:
        modes = all_modes(shape.m)
    rows = grad_check_rows(shape, args.j, modes, args.h, args.n)
    if rows and rows[0][-1]:
        print(f"warning: eigenvalue {args.j} is in a multiplicity cluster", file=sys.stderr)
    io.write_rows(args.out, ["mode", "analytic", "fd", "rel_err", "cluster_warning"], rows)
    return [args.out] if args.out else []


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steklov", description=__doc__.splitlines()[0])
    parser.add_argument("--rng-seed", type=int, default=None, help="random seed (env STEKLOV_RNG_SEED)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="Steklov eigenvalues of a shape")
    p.add_argument("shape")
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--count", type=int, default=12)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--rel-tol", type=float, default=1e-6, help="cluster tolerance")
    p.add_argument("--dump-operators", metavar="DIR", help="write A.csv and B.csv")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("converge", help="self-convergence study against a reference resolution")
    p.add_argument("shape")
    p.add_argument("--n-list", required=True, help="e.g. 200,300,400 or 16:128:16")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--ref-n", type=int, default=1800)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("optimize", help="maximize Lambda_p")
    p.add_argument("--p", type=int)
    p.add_argument("--mode", choices=["full", "symmetric"])
    p.add_argument("--seed", help="random | interp | path to shape JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="JSON or key = value run configuration")
    p.add_argument("--m-window", type=int)
    p.add_argument("--m-max", type=int)
    p.add_argument("--n-nodes", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--step-tol", type=float)
    p.add_argument("--stat-tol", type=float)
    p.add_argument("--subproblem", choices=["qp", "lp"])
    p.add_argument("--restarts", type=int)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("field", help="sample an eigenfunction on a rectangular grid")
    p.add_argument("shape")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--grid", default="101x101")
    p.add_argument("--bbox", help="xmin,xmax,ymin,ymax")
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("sweep-interp", help="Lambda_p of the interpolated family")
    p.add_argument("--p-range", default="6:20")
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep_interp)

    p = sub.add_parser("grad-check", help="shape gradient against central differences")
    p.add_argument("shape")
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--modes", help="comma separated, e.g. a0,a2,b1")
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grad_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        outputs = args.func(args)
    except (UsageError, ShapeError, ValueError, OSError) as exc:
        print(f"steklov {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, np.linalg.LinAlgError, SteklovError) as exc:
        print(f"steklov {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if outputs:
        params = {k: v for k, v in vars(args).items() if k != "func"}
        inputs = {"shape": params.get("shape"), "config": params.get("config")}
        first = Path(outputs[0])
        manifest = first.parent / "manifest.json" if args.command == "optimize" else _manifest_for(first)
        io.write_manifest(manifest, args.command, inputs, params, outputs, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
