"""epsilon-ball hulls: per-flat Euclidean hulls dualized to horoballs.

Inside one chart (a flat with a fixed axis order) a halfspace with normal
``u`` is exactly a horoball when ``-u`` is strictly decreasing; other
normals belong to another axis order of the same flat.  Each flat is
therefore processed in all ``n!`` orders, keeping the in-order facets and
closing every order with support horoballs at its boundary directions.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import ConvexHull
from sklearn.isotonic import isotonic_regression

from . import symcore
from .dirgrid import DEFAULT_CELL_CAP, build_grid, grid_resolution
from .exceptions import DomainError, ResourceError
from .horofn import DIRECTION_GAP, Flat, Horoball, Horofunction, chart_coords, signed_permutation

logger = logging.getLogger(__name__)

CONTAIN_SLACK = 1e-9
SUPPORT_SLACK = 1e-9
# separation used when a tied direction is nudged into a chamber
TIE_NUDGE = 2e-9


class FlatChart(NamedTuple):
    flat: Flat
    points: np.ndarray


class Halfspace(NamedTuple):
    """``{y : <normal, y> <= offset}`` with the chart points touching its boundary."""

    normal: np.ndarray
    offset: float
    vertices: tuple


def project_to_flat(points, flat):
    """Chart of ``points`` in ``flat``: log-diagonals of their horospherical projections."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[None]
    return FlatChart(flat, chart_coords(points, flat.rotation))


# -- Euclidean hulls -------------------------------------------------------


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def monotone_chain(points):
    """Indices of the convex hull of 2-D points in counter-clockwise order.

    Collinear boundary points are dropped.
    """
    pts = np.asarray(points, dtype=float)
    order = sorted(range(len(pts)), key=lambda k: (pts[k, 0], pts[k, 1]))
    if len(order) <= 2:
        return order
    scale = max(np.abs(pts).max(), 1.0)
    tol = 1e-12 * scale * scale

    def half(idx):
        chain = []
        for k in idx:
            while len(chain) >= 2 and _cross(pts[chain[-2]], pts[chain[-1]], pts[k]) <= tol:
                chain.pop()
            chain.append(k)
        return chain

    lower = half(order)
    upper = half(order[::-1])
    return lower[:-1] + upper[:-1]


def _touching(points, normal, offset, slack=SUPPORT_SLACK):
    return tuple(int(k) for k in np.flatnonzero(points @ normal >= offset - slack))


def support_halfspace(points, direction):
    """Supporting halfspace of a point cloud with outward normal ``direction``."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    beta = float(np.max(points @ u))
    return Halfspace(u, beta, _touching(points, u, beta))


def direction_net(n, step):
    """Roughly uniform unit vectors in R^n at angular spacing ``step``."""
    step = min(step, math.pi / 4)
    if n == 2:
        k = max(8, math.ceil(2 * math.pi / step))
        t = np.arange(k) * (2 * math.pi / k)
        return np.column_stack([np.cos(t), np.sin(t)])
    if n == 3:
        k = max(26, math.ceil(4 * math.pi / step**2))
        i = np.arange(k) + 0.5
        z = 1 - 2 * i / k
        r = np.sqrt(1 - z * z)
        phi = i * math.pi * (3 - math.sqrt(5))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    k = max(4 * n, math.ceil((2 / step) ** (n - 1)))
    rng = np.random.default_rng(12345 + n)
    v = rng.standard_normal((k, n))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def flat_convex_hull(chart, net_step=None):
    """Supporting halfspaces of the chart points.

    Full-dimensional inputs yield exactly the hull facets (monotone chain in
    the plane, Qhull above).  Inputs spanning a lower-dimensional affine
    subspace yield both halfspaces of each complementary direction plus the
    facets of the hull inside the subspace, lifted back; the result is
    again an exact description.  ``net_step`` additionally appends support
    halfspaces over a direction net at that angular spacing.
    """
    pts = chart.points if isinstance(chart, FlatChart) else np.asarray(chart, dtype=float)
    n_pts, n = pts.shape
    center = pts.mean(axis=0)
    centered = pts - center
    _, sv, vt = np.linalg.svd(centered, full_matrices=True)
    scale = max(np.abs(pts).max(), 1.0)
    rank = int(np.sum(sv > 1e-9 * scale))
    out = []
    if rank == n:
        if n == 2:
            idx = monotone_chain(pts)
            for a, b in zip(idx, idx[1:] + idx[:1]):
                d = pts[b] - pts[a]
                u = np.array([d[1], -d[0]]) / np.hypot(d[0], d[1])
                beta = float(np.max(pts[[a, b]] @ u))
                out.append(Halfspace(u, beta, _touching(pts, u, beta)))
        else:
            hull = ConvexHull(pts)
            seen = set()
            for eq in hull.equations:
                u = eq[:-1] / np.linalg.norm(eq[:-1])
                beta = float(np.max(pts @ u))
                key = tuple(np.round(np.append(u, beta), 9))
                if key in seen:
                    continue
                seen.add(key)
                out.append(Halfspace(u, beta, _touching(pts, u, beta)))
    else:
        for w in vt[rank:]:
            for u in (w, -w):
                out.append(support_halfspace(pts, u))
        if rank == 1:
            for u in (vt[0], -vt[0]):
                out.append(support_halfspace(pts, u))
        elif rank > 1:
            basis = vt[:rank]
            for hs in flat_convex_hull(centered @ basis.T):
                out.append(support_halfspace(pts, hs.normal @ basis))
    if net_step is not None:
        for u in direction_net(n, net_step):
            out.append(support_halfspace(pts, u))
    return out


# -- dualization -----------------------------------------------------------


def _is_decreasing(a):
    return bool(np.all(np.diff(a) < -DIRECTION_GAP))


def nudge_decreasing(v):
    """Unit vector near ``v`` whose entries decrease with gap above the minimum.

    ``v`` is first projected onto the cone of non-increasing vectors; returns
    ``None`` when that projection vanishes.
    """
    v = np.asarray(v, dtype=float)
    if _is_decreasing(v / np.linalg.norm(v)):
        return v / np.linalg.norm(v)
    w = isotonic_regression(v, increasing=False)
    norm = np.linalg.norm(w)
    if norm < 1e-12 * max(np.linalg.norm(v), 1.0):
        return None
    w = w / norm
    n = len(w)
    w = w + TIE_NUDGE * (np.arange(n)[::-1] - (n - 1) / 2)
    w = w / np.linalg.norm(w)
    return w if _is_decreasing(w) else None


def facet_to_horoball(halfspace, flat, points=None):
    """Dual horoball of a chart halfspace.

    Returns ``(horoball, kind)``.  ``kind`` is ``"exact"`` when ``-normal``
    is strictly decreasing (the horoball's chart image is the halfspace),
    ``"tie"`` when entries tie and the direction was nudged (level raised by
    the largest possible Busemann change), or ``"resorted"`` when the normal
    belongs to another axis order; then the horoball lives in the permuted
    flat at the support level of ``points``.
    """
    u = np.asarray(halfspace.normal, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise DomainError("halfspace normal must be a unit vector")
    a = -u
    if _is_decreasing(a):
        return Horoball(Horofunction(flat, a), float(halfspace.offset)), "exact"
    if np.all(np.diff(a) <= DIRECTION_GAP):
        a2 = nudge_decreasing(a)
        radius = 0.0
        if points is not None:
            pts = np.asarray(points, dtype=float)
            radius = float(np.linalg.norm(chart_coords(pts, flat.rotation), axis=-1).max())
        level = float(halfspace.offset) + np.linalg.norm(a2 - a) * radius
        return Horoball(Horofunction(flat, a2), level), "tie"
    if points is None:
        raise DomainError("re-sorting a facet direction needs the point set for its level")
    perm = np.argsort(-a, kind="stable")
    flat2 = flat.permuted(perm)
    h = Horofunction(flat2, nudge_decreasing(a[perm]))
    level = float(np.max(np.atleast_1d(h(np.asarray(points, dtype=float)))))
    return Horoball(h, level), "resorted"


# -- the hull --------------------------------------------------------------


def chart_key(rotation):
    """Hashable key of a chart: its rotation up to column signs."""
    cols = np.array(rotation, dtype=float).T
    for c in cols:
        k = np.argmax(np.abs(c) > 1e-6)
        if c[k] < 0:
            c *= -1
    return tuple(np.round(cols, 8).ravel() + 0.0)


def polytope_support(normals, offsets, direction, chunk=20_000):
    """``max <direction, y>`` over ``{y : normals @ y <= offsets}`` by vertex enumeration.

    Vertices are solved in batches of ``chunk`` n-subsets.  Returns ``inf``
    when the region has no vertex.
    """
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    direction = np.asarray(direction, dtype=float)
    n = normals.shape[1]
    best = -math.inf
    scale = max(1.0, float(np.abs(offsets).max(initial=0.0)))
    combos = itertools.combinations(range(len(normals)), n)
    while True:
        idx = np.array(list(itertools.islice(combos, chunk)), dtype=int).reshape(-1, n)
        if len(idx) == 0:
            break
        m = normals[idx]
        ok = np.abs(np.linalg.det(m)) >= 1e-10
        if not ok.any():
            continue
        v = np.linalg.solve(m[ok], offsets[idx[ok]][..., None])[..., 0]
        feasible = np.all(v @ normals.T <= offsets + 1e-9 * scale, axis=1)
        if feasible.any():
            best = max(best, float((v[feasible] @ direction).max()))
    return best if best > -math.inf else math.inf


@dataclass
class BallHull:
    """A finite intersection of horoballs around a translated point set.

    Horoballs are expressed in the translated frame where ``origin_shift``
    sits at the identity; :meth:`violation` applies the shift.
    """

    origin_shift: np.ndarray
    horoballs: list
    provenance: list
    epsilon: float
    d_X: float
    grid: object = field(default=None, repr=False)
    origin_index: int = None

    def __post_init__(self):
        self._pack()

    def _pack(self):
        groups = {}
        for k, hb in enumerate(self.horoballs):
            rot, a = hb.horofunction.canonical()
            key = chart_key(rot)
            g = groups.setdefault(key, {"rotation": rot, "dirs": [], "levels": [], "index": []})
            g["dirs"].append(a)
            g["levels"].append(hb.level)
            g["index"].append(k)
        self._groups = {
            key: (g["rotation"], np.array(g["dirs"]), np.array(g["levels"]), g["index"])
            for key, g in groups.items()
        }
        self._inv_root = symcore.spd_invsqrt(self.origin_shift)

    @property
    def n(self):
        return self.origin_shift.shape[0]

    def translate(self, points):
        """Map points into the hull's frame (origin shift at the identity)."""
        points = np.asarray(points, dtype=float)
        r = self._inv_root
        out = np.einsum("ij,...jk,lk->...il", r, points, r)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def violation(self, points, translated=False):
        """Largest ``b(p) - level`` over all horoballs, per point."""
        points = np.asarray(points, dtype=float)
        single = points.ndim == 2
        pts = points[None] if single else points
        if not translated:
            pts = self.translate(pts)
        worst = np.full(len(pts), -math.inf)
        for rot, dirs, levels, _ in self._groups.values():
            y = chart_coords(pts, rot)
            worst = np.maximum(worst, (-(y @ dirs.T) - levels).max(axis=1))
        return float(worst[0]) if single else worst

    def contains(self, points, translated=False):
        return np.asarray(self.violation(points, translated)) <= CONTAIN_SLACK

    def support(self, h):
        """Smallest level this hull certifies for horofunction ``h`` (translated frame).

        Computed over the horoballs sharing ``h``'s chart; ``inf`` when the
        hull has no horoballs there.
        """
        rot, a = h.canonical()
        group = self._groups.get(chart_key(rot))
        if group is None:
            return math.inf
        _, dirs, levels, _ = group
        return polytope_support(-dirs, levels, -a)


def discrete_center(points):
    """Index of the input point minimizing its largest distance to the others."""
    n_pts = len(points)
    dist = np.zeros((n_pts, n_pts))
    for i in range(n_pts):
        for j in range(i + 1, n_pts):
            dist[i, j] = dist[j, i] = symcore.metric_dist(points[i], points[j])
    return int(np.argmin(dist.max(axis=1)))


def check_points(points):
    """Validate a stack of SPD matrices, returning a float array (N, n, n)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2:
        pts = pts[None]
    if pts.ndim != 3 or pts.shape[1] != pts.shape[2]:
        raise DomainError(f"expected an array of square matrices, got shape {pts.shape}")
    if len(pts) == 0:
        raise DomainError("point set is empty")
    return np.array([symcore.check_spd(p, f"point {k}") for k, p in enumerate(pts)])


def shift_origin(points, origin="auto"):
    """Choose the origin and translate. Returns ``(q, index, translated, d_X)``."""
    if origin is None or origin == "none":
        q = np.eye(points.shape[1])
        index = None
    else:
        index = discrete_center(points) if origin == "auto" else int(origin)
        if not 0 <= index < len(points):
            raise DomainError(f"origin index {index} out of range")
        q = points[index]
    translated = np.array([symcore.translate_to_identity(q, p) for p in points])
    eye = np.eye(points.shape[1])
    if index is not None:
        translated[index] = eye
    d_x = max(symcore.metric_dist(eye, p) for p in translated)
    return q, index, translated, d_x


def _chart_horoballs(pts, flat, chamber):
    """Horoballs for one flat in one axis order."""
    rot = flat.rotation @ signed_permutation(chamber)
    chart_flat = Flat(rot)
    y = chart_coords(pts, rot)
    out = []
    for hs in flat_convex_hull(y):
        if _is_decreasing(-hs.normal):
            out.append((Horoball(Horofunction(chart_flat, -hs.normal), float(hs.offset) + 0.0), hs.vertices, "facet"))
            continue
        # out-of-order normal: close the chamber at the nearest in-order direction
        a = nudge_decreasing(-hs.normal)
        if a is not None:
            out.append(_support_ball(chart_flat, y, a, "boundary"))
    n = y.shape[1]
    for s in (1.0, -1.0):
        a = nudge_decreasing(s * np.ones(n))
        out.append(_support_ball(chart_flat, y, a, "boundary"))
    return out


def _support_ball(flat, y, a, kind):
    values = -(y @ a)
    level = float(values.max()) + 0.0
    touching = tuple(int(k) for k in np.flatnonzero(values >= level - SUPPORT_SLACK))
    return Horoball(Horofunction(flat, a), level), touching, kind


def build_eps_ball_hull(points, epsilon, origin="auto", cell_cap=DEFAULT_CELL_CAP, threads=1):
    """Construct an epsilon-ball hull of ``points``.

    Parameters
    ----------
    points : array_like, shape (N, n, n)
    epsilon : float
        Target horoextent accuracy.
    origin : "auto", int or None
        Origin policy: discrete 1-center of the input (default), a fixed
        input index, or no shift.
    cell_cap : int
        Largest allowed number of grid cells.
    threads : int
        Parallel per-flat workers; output does not depend on it.
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    pts = check_points(points)
    n = pts.shape[1]
    q, index, shifted, d_x = shift_origin(pts, origin)
    delta = grid_resolution(epsilon, d_x, n)
    try:
        grid = build_grid(n, delta, cell_cap)
    except ResourceError as exc:
        raise ResourceError(
            f"{exc}; epsilon={epsilon:g} at d_X={d_x:.4g} is too fine for this cap"
        ) from exc

    def work(k):
        flat = grid.flats[k]
        return [(k, chamber, item) for chamber in grid.chambers
                for item in _chart_horoballs(shifted, flat, chamber)]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(len(grid))))
    else:
        results = [work(k) for k in range(len(grid))]

    horoballs, provenance, seen = [], [], set()
    for chunk in results:
        for k, chamber, (hb, touching, kind) in chunk:
            key = (chart_key(hb.horofunction.flat.rotation),
                   tuple(np.round(hb.horofunction.direction, 9)), round(hb.level, 9))
            if key in seen:
                continue
            seen.add(key)
            horoballs.append(hb)
            provenance.append({"flat": k, "chamber": list(chamber), "vertices": list(touching),
                               "kind": kind})
    logger.info("eps-ball hull: %d flats, %d horoballs, d_X=%.4g", len(grid), len(horoballs), d_x)
    return BallHull(q, horoballs, provenance, float(epsilon), float(d_x), grid, index)


def hull_contains(hull, p):
    """Membership of ``p`` (original frame) in the horoball intersection."""
    return bool(hull.contains(p))
