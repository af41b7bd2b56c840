"""Command-line front end.

JSON results go to stdout (or ``--output``); a human summary goes to
stderr.  Exit codes: 0 success, 2 bad input, 3 resource cap, 4 numerical
failure.
"""

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import io
from .ballhull import build_eps_ball_hull, shift_origin
from .centerpt import DEFAULT_TOL, approx_horo_center
from .dirgrid import DEFAULT_CELL_CAP, build_grid, grid_resolution
from .exceptions import DomainError, PDGeoError, SolverError
from .horofn import Flat, Horofunction, horoextent
from .oracles import random_horofunction
from .symcore import translate_from_identity

SEED_ENV = "PDGEO_SEED"


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise DomainError(f"{SEED_ENV}={env!r} is not an integer") from exc


def _origin(args):
    if args.no_shift:
        return None
    if args.origin_index is not None:
        return args.origin_index
    return "auto"


def _emit(args, doc):
    text = io.dumps(doc)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _say(msg):
    print(msg, file=sys.stderr)


def cmd_hull(args):
    data = io.load_dataset(args.dataset, args.format)
    start = time.perf_counter()
    hull = build_eps_ball_hull(data.points, args.epsilon, _origin(args), args.grid_cap,
                               args.threads)
    wall = time.perf_counter() - start
    _emit(args, io.hull_to_dict(hull))
    _say(f"grid flats: {len(hull.grid)}  horoballs: {len(hull.horoballs)}  "
         f"d_X: {hull.d_X:.6g}  wall: {wall:.2f}s")
    return 0


def cmd_center(args):
    data = io.load_dataset(args.dataset, args.format)
    seed = _seed(args)
    try:
        res = approx_horo_center(data.points, args.epsilon, _origin(args), tol=args.tol,
                                 cell_cap=args.grid_cap, subset_cap=args.subset_cap, seed=seed)
    except SolverError as exc:
        _say(f"solver failed, best violation {exc.best_violation:.3e}")
        raise
    _emit(args, io.center_to_dict(res))
    _say(f"constraints: {res.constraints_count}  max violation: {res.max_violation:.3e}  "
         f"objective (log det): {res.objective:.10g}")
    return 0


def _direction(args, n):
    if args.direction is None:
        raise DomainError("give --direction (with optional --rotation) or --random k")
    a = np.array([float(v) for v in args.direction.split(",")])
    rot = np.eye(n) if args.rotation is None else np.array(json.loads(args.rotation), dtype=float)
    return Horofunction(Flat(rot), a, args.sign)


def cmd_extent(args):
    data = io.load_dataset(args.dataset, args.format)
    origin = _origin(args)
    if origin is None:
        pts = data.points
    else:
        _, _, pts, _ = shift_origin(data.points, origin)
    if args.random:
        rng = np.random.default_rng(_seed(args))
        hs = [random_horofunction(data.n, rng, sign=1) for _ in range(args.random)]
    else:
        hs = [_direction(args, data.n)]
    rows = [{"Q": h.flat.rotation, "a": h.direction, "extent": horoextent(h, pts)} for h in hs]
    _emit(args, {"seed": _seed(args) if args.random else None, "extents": rows})
    values = [r["extent"] for r in rows]
    _say(f"{len(values)} extents, max {max(values):.6g}")
    return 0


def cmd_grid(args):
    if args.delta is not None:
        delta = args.delta
    else:
        if args.d_x is None:
            raise DomainError("give --delta or --d-x")
        delta = grid_resolution(args.epsilon, args.d_x, args.n, factor=args.factor)
    grid = build_grid(args.n, delta, args.grid_cap)
    doc = {"n": args.n, "delta": delta if math.isfinite(delta) else None,
           "cell_count": grid.cell_count, "flats": len(grid),
           "charts": len(grid) * len(grid.chambers)}
    _emit(args, doc)
    _say(f"cells: {grid.cell_count}  unique flats: {len(grid)}")
    return 0


def _disk(p):
    logdet = float(np.log(np.linalg.det(p)))
    q = p / math.exp(logdet / 2)
    u = (q[0, 0] + q[1, 1]) / 2
    v = (q[0, 0] - q[1, 1]) / 2
    w = q[0, 1]
    return logdet, float(v / (1 + u)), float(w / (1 + u))


def cmd_plot2(args):
    data = io.load_dataset(args.dataset, args.format)
    if data.n != 2:
        raise DomainError(f"plot2 needs n=2 data, got n={data.n}")
    lines = ["kind,index,logdet,disk_x,disk_y"]
    for k, p in enumerate(data.points):
        lines.append("point,%d,%r,%r,%r" % ((k,) + _disk(p)))
    if args.hull:
        hull = io.load_hull(args.hull)
        for k, hb in enumerate(hull.horoballs):
            for p in _horocycle(hb, args.trace_points):
                moved = translate_from_identity(hull.origin_shift, p)
                lines.append("horosphere,%d,%r,%r,%r" % ((k,) + _disk(moved)))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    _say(f"{len(data)} points written")
    return 0


def _horocycle(hb, count):
    """Points on the level set of a PD(2) horoball (translated frame)."""
    rot, a = hb.horofunction.canonical()
    out = []
    # y solves -a.y = level on the flat; sweep the unipotent coordinate
    y = -hb.level * a
    for x in np.linspace(-3.0, 3.0, count):
        nu = np.array([[1.0, x], [0.0, 1.0]])
        out.append(rot @ nu @ np.diag(np.exp(y)) @ nu.T @ rot.T)
    return out


def cmd_validate(args):
    data = io.load_dataset(args.dataset, args.format)
    _, index, _, d_x = shift_origin(data.points, "auto")
    _emit(args, {"n": data.n, "count": len(data), "origin_index": index, "d_X": d_x})
    _say(f"ok: {len(data)} points in PD({data.n}), d_X {d_x:.6g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="pdgeo", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dataset=True):
        if dataset:
            p.add_argument("dataset")
            p.add_argument("--format", choices=["json", "csv"])
        p.add_argument("--epsilon", type=float, default=0.1)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--grid-cap", type=int, default=DEFAULT_CELL_CAP)
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--origin-index", type=int)
        p.add_argument("--no-shift", action="store_true")
        p.add_argument("--output", "-o")

    p = sub.add_parser("hull", help="build an epsilon-ball hull")
    common(p)
    p.set_defaults(func=cmd_hull)

    p = sub.add_parser("center", help="epsilon-approximate horo-center point")
    common(p)
    p.add_argument("--subset-cap", type=int)
    p.set_defaults(func=cmd_center)

    p = sub.add_parser("extent", help="horoextents along given or random directions")
    common(p)
    p.add_argument("--direction", help="comma-separated unit decreasing diagonal; "
                   "use --direction=-0.6,-0.8 when it starts with a minus")
    p.add_argument("--rotation", help="flat rotation as a JSON matrix (default identity)")
    p.add_argument("--sign", type=int, default=1, choices=[1, -1])
    p.add_argument("--random", type=int, metavar="K")
    p.set_defaults(func=cmd_extent)

    p = sub.add_parser("grid", help="inspect the direction grid")
    common(p, dataset=False)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d-x", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--factor", type=float, default=0.5)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("plot2", help="PD(2) plot data: log det and Poincare-disk coordinates")
    common(p)
    p.add_argument("--hull", help="hull JSON whose horospheres are traced")
    p.add_argument("--trace-points", type=int, default=50)
    p.set_defaults(func=cmd_plot2)

    p = sub.add_parser("validate", help="load and check a dataset")
    common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "epsilon", 1.0) <= 0:
            raise DomainError("--epsilon must be positive")
        if getattr(args, "grid_cap", 1) <= 0 or getattr(args, "threads", 1) <= 0:
            raise DomainError("caps and --threads must be positive")
        return args.func(args)
    except PDGeoError as exc:
        _say(f"error: {exc}")
        return exc.exit_code
    except OSError as exc:
        _say(f"error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
