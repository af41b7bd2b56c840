"""epsilon-approximate horo-center points.

Constraints are horoballs holding at least ``m`` of the ``N`` data points,
``m`` the smallest integer above ``N d / (d + 1)`` with ``d = n(n+1)/2``.
They come from hyperplanes through ``n`` chart points in every grid chart.
The intersection is searched by a two-phase method on the manifold:
projections onto violated horoballs (each Busemann function has a unit
gradient whose flow line is a geodesic ray, and moving along it is the
metric projection), then bisection on the ``log det`` level.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import symcore
from .ballhull import check_points, nudge_decreasing, shift_origin
from .dirgrid import DEFAULT_CELL_CAP, build_grid, grid_resolution
from .exceptions import DomainError, NumericalError, ResourceError, SolverError
from .horofn import DIRECTION_GAP, Flat, Horoball, Horofunction, _ldl_upper, busemann_descent

logger = logging.getLogger(__name__)

COUNT_SLACK = 1e-9
DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
SUBSET_CAPS = {2: 40, 3: 25}
UNBOUNDED_DROP = 1e3
SLICE_BUDGET = 2000
SLICE_STALL = 50


def depth_threshold(n_points, n):
    """Smallest integer strictly greater than ``N d / (d + 1)``."""
    d = n * (n + 1) // 2
    return (n_points * d) // (d + 1) + 1


@dataclass
class ConstraintSet:
    """Horoball constraints grouped by chart rotation.

    ``chart[i]`` indexes ``rotations``; constraint ``i`` reads
    ``-directions[i] . y_chart(p) <= levels[i]``.
    """

    rotations: np.ndarray
    chart: np.ndarray
    directions: np.ndarray
    levels: np.ndarray
    provenance: list
    n: int
    N: int
    m: int

    @property
    def d(self):
        return self.n * (self.n + 1) // 2

    def __len__(self):
        return len(self.levels)

    def horoball(self, i):
        return Horoball(Horofunction(Flat(self.rotations[self.chart[i]]), self.directions[i]),
                        float(self.levels[i]))

    def subset(self, index):
        index = np.asarray(index)
        return ConstraintSet(self.rotations, self.chart[index], self.directions[index],
                             self.levels[index], [self.provenance[i] for i in index],
                             self.n, self.N, self.m)

    def chart_coords(self, p):
        """Chart coordinates of one point in every chart, shape (charts, n)."""
        rot = self.rotations
        eye = np.eye(self.n)
        frame = np.einsum("cji,jk,ckl->cil", rot, p - eye, rot) + eye
        frame = 0.5 * (frame + np.swapaxes(frame, -1, -2))
        _, f = _ldl_upper(frame, False)
        return np.log(f)

    def violations(self, p):
        """``b_i(p) - r_i`` for every constraint."""
        y = self.chart_coords(np.asarray(p, dtype=float))
        return -np.einsum("ij,ij->i", self.directions, y[self.chart]) - self.levels

    def count_contained(self, points):
        """Number of ``points`` inside each constraint horoball (slack included)."""
        pts = np.asarray(points, dtype=float)
        counts = np.zeros(len(self), dtype=int)
        for p in pts:
            counts += self.violations(p) <= COUNT_SLACK
        return counts


@dataclass
class CenterResult:
    point: np.ndarray
    max_violation: float
    objective: float
    iterations: int
    constraints_count: int = 0
    grid_size: int = 0
    seed: int = 0
    constraints: ConstraintSet = field(default=None, repr=False)
    origin_shift: np.ndarray = field(default=None, repr=False)


def _hyperplanes(y, n):
    """Normals and offsets of hyperplanes through each affinely independent n-subset."""
    subsets = list(itertools.combinations(range(len(y)), n))
    normals, offsets, keep = [], [], []
    scale = max(np.abs(y).max(), 1.0)
    for s in subsets:
        pts = y[list(s)]
        diffs = pts[1:] - pts[0]
        if n == 2:
            d = diffs[0]
            length = math.hypot(d[0], d[1])
            if length < 1e-9 * scale:
                continue
            u = np.array([d[1], -d[0]]) / length
        else:
            _, sv, vt = np.linalg.svd(diffs, full_matrices=True)
            if len(sv) < n - 1 or sv[-1] < 1e-9 * scale:
                continue
            u = vt[-1]
        normals.append(u)
        offsets.append(float(pts[0] @ u))
        keep.append(s)
    return np.array(normals).reshape(-1, n), np.array(offsets), keep


def generate_constraints(points, grid, subset_cap=None):
    """Depth constraints for (already translated) ``points`` over every grid chart.

    For each chart and each affinely independent ``n``-subset of chart
    points, both closed halfspaces bounded by their hyperplane are tested;
    those holding at least ``m`` points become constraints.  A halfspace
    whose normal is out of the chart's axis order is replaced by the
    nearest in-order direction, leveled at the ``m``-th smallest Busemann
    value so it still holds ``m`` points; the two log-det directions are
    added per chart the same way.
    """
    pts = check_points(points)
    n_pts, n = pts.shape[0], pts.shape[1]
    if n_pts < n:
        raise DomainError(f"need at least n={n} points")
    cap = subset_cap if subset_cap is not None else SUBSET_CAPS.get(n, 20)
    if n_pts > cap:
        raise ResourceError(
            f"{n_pts} points exceed the subset-enumeration cap {cap} for n={n}; "
            "subsample the data or raise the cap"
        )
    m = depth_threshold(n_pts, n)
    rotations = grid.chart_rotations()
    charts, dirs, levels, prov = [], [], [], []

    def probe(y, a):
        values = np.sort(-(y @ a))
        return float(values[m - 1])

    for c, rot in enumerate(rotations):
        eye = np.eye(n)
        frame = np.einsum("ji,pjk,kl->pil", rot, pts - eye, rot) + eye
        _, f = _ldl_upper(0.5 * (frame + np.swapaxes(frame, -1, -2)), False)
        y = np.log(f)
        normals, offsets, subsets = _hyperplanes(y, n)
        if len(normals):
            proj = y @ normals.T
            for sgn in (1.0, -1.0):
                inside = (sgn * proj <= sgn * offsets + COUNT_SLACK).sum(axis=0)
                for k in np.flatnonzero(inside >= m):
                    a = -sgn * normals[k]
                    if np.all(np.diff(a) < -DIRECTION_GAP):
                        level = sgn * offsets[k]
                        kind = "subset"
                    else:
                        a = nudge_decreasing(a)
                        if a is None:
                            continue
                        level = probe(y, a)
                        kind = "boundary"
                    charts.append(c)
                    dirs.append(a)
                    levels.append(level)
                    prov.append({"chart": c, "subset": list(subsets[k]), "kind": kind})
        for s in (1.0, -1.0):
            a = nudge_decreasing(s * np.ones(n))
            charts.append(c)
            dirs.append(a)
            levels.append(probe(y, a))
            prov.append({"chart": c, "subset": [], "kind": "logdet"})
    dirs = np.array(dirs).reshape(-1, n)
    levels = np.array(levels)
    charts = np.array(charts, dtype=int)
    key = np.column_stack([charts, np.round(dirs, 9), np.round(levels, 9)])
    _, first = np.unique(key, axis=0, return_index=True)
    first = np.sort(first)
    return ConstraintSet(rotations, charts[first], dirs[first], levels[first],
                         [prov[i] for i in first], n, n_pts, m)


def _project(cons, p, max_iter, relax=0.5):
    """Drive ``p`` into the constraint intersection by successive horoball projections."""
    for it in range(max_iter):
        v = cons.violations(p)
        i = int(np.argmax(v))
        if v[i] <= 0.0:
            return p, float(v[i]), it
        h = Horofunction(Flat(cons.rotations[cons.chart[i]]), cons.directions[i])
        p = busemann_descent(h, p, v[i] * (1.0 + relax) + 1e-12)
    v = cons.violations(p)
    return p, float(v.max()), max_iter


def _logdet(p):
    sign, val = np.linalg.slogdet(p)
    return float(val)


def _slice_feasible(cons, p, level, max_iter, tol, stall_limit=SLICE_STALL):
    """Alternating projections between the slice ``log det = level`` and the horoballs.

    Scaling is the metric projection onto the slice and the Busemann
    descent step is the metric projection onto a horoball, so the iterates
    approach the intersection when it is nonempty.  Returns
    ``(point, found, iterations)``; ``found`` is False once the largest
    violation stops shrinking.
    """
    n = cons.n
    best, stall = math.inf, 0
    for it in range(max_iter):
        p = p * math.exp((level - _logdet(p)) / n)
        v = cons.violations(p)
        i = int(np.argmax(v))
        if v[i] <= tol:
            return p, True, it + 1
        if v[i] < best * (1 - 1e-3):
            best, stall = v[i], 0
        else:
            stall += 1
            if stall > stall_limit:
                return p, False, it + 1
        h = Horofunction(Flat(cons.rotations[cons.chart[i]]), cons.directions[i])
        p = busemann_descent(h, p, v[i])
    return p, False, max_iter


def solve_center(constraints, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, seed=0, start=None):
    """Feasible point of the constraint intersection with smallest ``log det``.

    Phase 1 projects the start point (identity by default) into the
    intersection.  Phase 2 bisects on the ``log det`` level: each level set
    is a totally geodesic slice, and alternating projections decide
    whether it meets the intersection.  The feasible levels form an
    interval, so bisection brackets the minimum to ``tol``; a final
    projection makes the returned point strictly feasible.
    ``seed`` is recorded only; the method is deterministic.
    """
    n = constraints.n
    p0 = np.eye(n) if start is None else np.asarray(start, dtype=float)
    if len(constraints) == 0:
        return CenterResult(p0, -math.inf, _logdet(p0), 0, 0, seed=seed, constraints=constraints)
    p, worst, total = _project(constraints, p0, max_iter)
    if worst > tol:
        raise SolverError(
            f"no feasible point after {max_iter} projections (best violation {worst:.3e})",
            worst,
        )
    hi, p_hi = _logdet(p), p
    floor = hi - UNBOUNDED_DROP
    budget = SLICE_BUDGET
    lo, gap = None, 1.0
    try:
        while lo is None and total < max_iter:
            q, ok, used = _slice_feasible(constraints, p_hi, hi - gap, budget, tol)
            total += used
            if not ok:
                lo = hi - gap
            else:
                hi, p_hi = hi - gap, q
                gap *= 2.0
                if hi < floor:
                    raise NumericalError("log det is unbounded below on the constraint set")
        while lo is not None and hi - lo > tol and total < max_iter:
            mid = 0.5 * (lo + hi)
            q, ok, used = _slice_feasible(constraints, p_hi, mid, budget, tol)
            total += used
            if ok:
                hi, p_hi = mid, q
            else:
                lo = mid
    except (DomainError, NumericalError) as exc:
        # bounded problems never leave the well-conditioned region
        raise NumericalError(
            f"log det is unbounded below on the constraint set (breakdown near {hi:.4g}: {exc})"
        ) from exc
    if total >= max_iter:
        logger.warning("center solver stopped at the iteration cap; bracket width %.3g",
                       hi - (lo if lo is not None else -math.inf))
    best, viol, used = _project(constraints, p_hi, max(max_iter - total, 1000))
    total += used
    if viol > 0.0:
        best, viol = p, worst
    return CenterResult(best, float(viol), _logdet(best), total, len(constraints), seed=seed,
                        constraints=constraints)


def approx_horo_center(points, epsilon, origin="auto", tol=DEFAULT_TOL, cell_cap=DEFAULT_CELL_CAP,
                       subset_cap=None, max_iter=DEFAULT_MAX_ITER, seed=0):
    """epsilon-approximate horo-center point of ``points``.

    The data are translated so the discrete 1-center sits at the identity,
    constraints are generated on a grid of resolution
    ``epsilon / (C(n,2) 2 sqrt(2) sinh(d_X / sqrt(2)))``, and the solution
    is mapped back to the original frame.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    pts = check_points(points)
    n = pts.shape[1]
    if len(pts) < n + 1:
        raise DomainError(f"need at least n+1={n + 1} points")
    q, _, shifted, d_x = shift_origin(pts, origin)
    delta = grid_resolution(epsilon, d_x, n, factor=1.0)
    grid = build_grid(n, delta, cell_cap)
    cons = generate_constraints(shifted, grid, subset_cap)
    logger.info("center: %d charts, %d constraints", len(cons.rotations), len(cons))
    res = solve_center(cons, tol=tol, max_iter=max_iter, seed=seed)
    res.point = symcore.translate_from_identity(q, res.point)
    res.objective = _logdet(res.point)
    res.grid_size = len(grid)
    res.origin_shift = q
    return res
