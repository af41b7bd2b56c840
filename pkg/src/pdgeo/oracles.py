"""Brute-force references for the test suite. Not used on the main code path.

The limit form of the Busemann function is evaluated from distances alone
(via the eigensolver in a graded basis, which keeps the tiny eigenvalues
of ``c(t)^{-1/2} p c(t)^{-1/2}`` accurate), never from the horospherical
projection.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import symcore
from .ballhull import nudge_decreasing
from .centerpt import depth_threshold
from .dirgrid import random_rotation
from .exceptions import DomainError, NumericalError
from .horofn import Flat, Horofunction, busemann, horoextent


@dataclass
class SampledHull:
    points: np.ndarray
    generations: int
    truncated: bool = False


def iterated_geodesic_hull(points, generations, samples_per_pair=1, budget=2000, seed=0):
    """Iterated geodesic closure of ``points``.

    Each generation adds ``samples_per_pair`` points on the segment of every
    pair of the previous generation (the midpoint when it is 1, uniform
    random fractions otherwise).  New points are uniformly thinned when
    the total would exceed ``budget``.
    """
    rng = np.random.default_rng(seed)
    current = [np.asarray(p, dtype=float) for p in points]
    truncated = False
    for _ in range(generations):
        pairs = [(i, j) for i in range(len(current)) for j in range(i + 1, len(current))]
        room = budget - len(current)
        wanted = len(pairs) * samples_per_pair
        if wanted > room:
            truncated = True
            keep = rng.choice(wanted, size=max(room, 0), replace=False)
            jobs = sorted(keep)
        else:
            jobs = range(wanted)
        new = []
        for job in jobs:
            i, j = pairs[job // samples_per_pair]
            t = 0.5 if samples_per_pair == 1 else rng.uniform()
            new.append(symcore.interpolate(current[i], current[j], t))
        current = current + new
    return SampledHull(np.array(current), generations, truncated)


def _ray_frame(h):
    v, w = symcore.sym_eig(h.tangent())
    return v, w


def _log_eigs_from_ray(h, p, t):
    v, w = _ray_frame(h)
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        scale = np.exp(-0.5 * t * w)
        m = v.T @ np.asarray(p, dtype=float) @ v
        graded = (scale[:, None] * m) * scale[None, :]
    if not np.all(np.isfinite(graded)):
        raise NumericalError(f"limit evaluation overflowed at t={t}")
    _, lam = symcore.sym_eig(graded)
    if not np.all(lam > 0):
        raise NumericalError(f"limit evaluation underflowed at t={t}")
    return np.log(lam)


def ray_distance(h, p, t):
    """``d(c(t), p)`` along the ray of ``h`` from distances only."""
    return float(np.linalg.norm(_log_eigs_from_ray(h, p, t)))


def busemann_by_limit(h, p, t_max=40.0):
    """``d(c(t_max), p) - t_max``: the defining limit truncated at ``t_max``."""
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    return ray_distance(h, p, t_max) - t_max


def busemann_by_secant(h, p, t_max=40.0):
    """Limit estimate with the ``1/t`` term removed.

    ``d(c(t), p)^2 - t^2`` is asymptotically affine in ``t`` with slope
    ``2 b(p)``; the secant slope between ``t_max / 2`` and ``t_max`` has
    error decaying exponentially in ``t_max`` times the direction's gap.
    """
    g1 = np.sum(_log_eigs_from_ray(h, p, t_max) ** 2) - t_max**2
    t0 = 0.5 * t_max
    g0 = np.sum(_log_eigs_from_ray(h, p, t0) ** 2) - t0**2
    return float((g1 - g0) / (2 * (t_max - t0)))


def random_direction(n, rng):
    """Unit vector with strictly decreasing entries (sorted Gaussian)."""
    while True:
        a = np.sort(rng.standard_normal(n))[::-1]
        a = a / np.linalg.norm(a)
        if np.all(np.diff(a) < -1e-9):
            return a


def random_horofunction(n, rng, sign=None):
    s = sign if sign is not None else int(rng.choice([1, -1]))
    return Horofunction(Flat(random_rotation(n, rng)), random_direction(n, rng), s)


def extent_by_sampling(points, direction_count, seed=0):
    """Horoextents of ``points`` along random rays through the identity."""
    rng = np.random.default_rng(seed)
    pts = np.asarray(points, dtype=float)
    n = pts.shape[-1]
    out = []
    for _ in range(direction_count):
        h = random_horofunction(n, rng, sign=1)
        out.append((h, horoextent(h, pts)))
    return out


@dataclass
class DepthReport:
    trials: int
    violations: int
    worst_gap: float
    m: int
    seed: int


def random_horoball_depth(points, p_hat, trials, epsilon, seed=0):
    """Audit the horo-center property of ``p_hat`` with random probe horoballs.

    Each probe is leveled at the ``m``-th smallest Busemann value over the
    data, so it holds at least ``m`` points; it is violated when
    ``b(p_hat)`` exceeds that level by more than ``epsilon + 1e-6``.
    """
    rng = np.random.default_rng(seed)
    pts = np.asarray(points, dtype=float)
    n = pts.shape[-1]
    m = depth_threshold(len(pts), n)
    bad, worst = 0, -math.inf
    for _ in range(trials):
        h = random_horofunction(n, rng, sign=1)
        level = np.sort(busemann(h, pts))[m - 1]
        gap = busemann(h, p_hat) - level
        worst = max(worst, gap)
        if gap > epsilon + 1e-6:
            bad += 1
    return DepthReport(trials, bad, float(worst), m, seed)


# -- data with no center point ---------------------------------------------


def collinear_dataset(n_points, spread=1.5, angle=0.3137, offset=0.0):
    """Points on one geodesic of the unit-determinant slice of PD(2)."""
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    ts = np.linspace(-spread, spread, n_points) + offset
    return np.array([symcore.sym((rot * np.exp(np.array([t, -t]) / math.sqrt(2))) @ rot.T)
                     for t in ts])


@dataclass
class ProbeBall:
    """Horoball ``{p : b(T p T) <= level}`` for a ray through ``T^{-2}``."""

    transform: np.ndarray
    horofunction: Horofunction
    level: float

    def value(self, points):
        pts = np.asarray(points, dtype=float)
        moved = np.einsum("ij,...jk,kl->...il", self.transform, pts, self.transform)
        return busemann(self.horofunction, 0.5 * (moved + np.swapaxes(moved, -1, -2))) - self.level

    def contains(self, points, slack=1e-9):
        return np.asarray(self.value(points)) <= slack


def _ray_horofunction(tangent):
    v, w = symcore.sym_eig(tangent)
    return Horofunction(Flat(v), w / np.linalg.norm(w))


def no_center_probe(points, candidate):
    """A horoball containing ``candidate`` but at most one point of a collinear set.

    ``points`` must lie on one geodesic of the unit-determinant slice of
    PD(2).  Off the slice the probe is a determinant bound; on the slice it
    touches the geodesic only at the candidate's closest point.
    """
    pts = np.asarray(points, dtype=float)
    cand = np.asarray(candidate, dtype=float)
    logdet = math.log(np.linalg.det(cand))
    eye = np.eye(2)
    if abs(logdet) > 1e-9:
        sign = 1 if logdet > 0 else -1
        h = Horofunction(Flat.identity(2), nudge_decreasing(np.ones(2)), sign)
        level = 0.5 * (busemann(h, cand) + busemann(h, pts).min())
        return ProbeBall(eye, h, level)
    geo, length = symcore.geodesic_between(pts[0], pts[-1])
    res = minimize_scalar(lambda t: symcore.metric_dist(geo(t), cand),
                          bounds=(-length - 10.0, 2 * length + 10.0), method="bounded",
                          options={"xatol": 1e-12})
    foot = geo(res.x)
    t_inv = symcore.spd_invsqrt(foot)
    moved = symcore.congruence(t_inv, cand)
    dist = symcore.metric_dist(eye, moved)
    if dist > 1e-6:
        h = _ray_horofunction(symcore.spd_log(moved))
        return ProbeBall(t_inv, h, -0.5 * dist)
    # candidate on the geodesic: perpendicular ray inside the slice
    along = symcore.congruence(t_inv, geo.tangent)
    along = along - np.trace(along) / 2 * eye
    perp = np.array([[along[0, 1], -along[0, 0]], [-along[0, 0], -along[0, 1]]])
    h = _ray_horofunction(perp)
    return ProbeBall(t_inv, h, busemann(h, moved))
