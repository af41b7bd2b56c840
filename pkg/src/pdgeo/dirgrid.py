"""Discretization of flat directions (rotations in SO(n)).

Angles are reported in *effective* units: a Givens factor rotating a plane
by ``phi`` moves points of PD(n) around a circle by ``theta = 2 * phi``, and
the Lipschitz bound on Busemann functions is linear in ``theta``.  Grid
steps and :func:`angle_distance` share those units.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError, ResourceError
from .horofn import Flat, signed_permutation

DEFAULT_CELL_CAP = 200_000


class GivensFactor(NamedTuple):
    i: int
    j: int
    angle: float


def canonical_planes(n):
    """Plane order used by every decomposition: (0,1), (0,2), ..., (n-2,n-1)."""
    return [(i, j) for i in range(n - 1) for j in range(i + 1, n)]


def givens_matrix(n, i, j, angle):
    g = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    g[i, i] = g[j, j] = c
    g[i, j] = -s
    g[j, i] = s
    return g


def compose(factors, n):
    """Product ``G_1 G_2 ... G_k`` of Givens factors."""
    out = np.eye(n)
    for f in factors:
        out = out @ givens_matrix(n, f.i, f.j, f.angle)
    return out


def _decompose_angles(q):
    """Canonical Givens angles for a stack of rotations, shape (..., C(n,2))."""
    m = np.array(q, dtype=float)
    n = m.shape[-1]
    planes = canonical_planes(n)
    angles = np.empty(m.shape[:-2] + (len(planes),))
    for k, (i, j) in enumerate(planes):
        phi = np.arctan2(m[..., j, i], m[..., i, i])
        angles[..., k] = phi
        c, s = np.cos(phi)[..., None], np.sin(phi)[..., None]
        ri = m[..., i, :].copy()
        rj = m[..., j, :].copy()
        m[..., i, :] = c * ri + s * rj
        m[..., j, :] = -s * ri + c * rj
    return angles


def givens_decompose(q):
    """Factor ``q`` in SO(n) as a product of C(n,2) plane rotations.

    Returns factors in canonical plane order with ``q == compose(factors)``.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if np.abs(q.T @ q - np.eye(n)).max() > 1e-9:
        raise DomainError("matrix is not orthogonal")
    if np.linalg.det(q) < 0:
        raise DomainError("rotation has determinant -1")
    angles = _decompose_angles(q)
    return [GivensFactor(i, j, float(a)) for (i, j), a in zip(canonical_planes(n), angles)]


def _sign_group(n):
    """Diagonal +-1 matrices with determinant +1 (they fix every flat's chart)."""
    out = []
    for signs in itertools.product((1.0, -1.0), repeat=n - 1):
        last = float(np.prod(signs))
        out.append(np.array(signs + (last,)))
    return np.array(out)


def _pair_distance(q, q2):
    # q: (..., n, n) stacks broadcast against q2
    rel = np.einsum("...ji,...jk->...ik", q, q2)
    return 2.0 * np.abs(_decompose_angles(rel)).max(axis=-1)


def angle_distance(q, q2):
    """Effective rotation angle between two flat rotations.

    Twice the largest canonical Givens angle of ``q^T q2``, minimized over
    the sign flips of ``q``'s columns, which leave the chart unchanged.
    """
    q = np.asarray(q, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    signs = _sign_group(q.shape[0])
    flipped = q[None, :, :] * signs[:, None, :]
    return float(_pair_distance(flipped, q2[None]).min())


def grid_resolution(epsilon, d_x, n, factor=0.5):
    """Angular step so that matched Busemann values differ by a controlled amount.

    ``factor * epsilon / (2 * C(n,2) * sqrt(2) * sinh(d_x / sqrt(2)))``; the
    default ``factor=0.5`` is the hull resolution, ``factor=1`` the center
    resolution.  Returns ``math.inf`` when ``d_x == 0`` (one flat suffices).
    """
    if not epsilon > 0:
        raise DomainError("epsilon must be positive")
    if d_x < 0:
        raise DomainError("d_x must be non-negative")
    if d_x == 0:
        return math.inf
    pairs = math.comb(n, 2)
    return factor * epsilon / (2 * pairs * math.sqrt(2) * math.sinh(d_x / math.sqrt(2)))


def _flat_key(q):
    # canonical form of a flat modulo signed permutations of its axes
    cols = q.T.copy()
    for c in cols:
        k = np.argmax(np.abs(c) > 1e-6)
        if c[k] < 0:
            c *= -1
    cols = np.round(cols, 9) + 0.0
    return tuple(sorted(map(tuple, cols)))


@dataclass(frozen=True)
class DirectionGrid:
    """Grid of flats covering SO(n) at effective angular step ``delta``.

    ``flats`` are deduplicated modulo signed axis permutations; every flat is
    used with all ``n!`` axis orderings (``chambers``), so ``chart_rotations``
    covers SO(n) at ``delta``.
    """

    n: int
    delta: float
    cell_count: int
    flats: list
    provenance: list
    chambers: list = field(repr=False)

    def __len__(self):
        return len(self.flats)

    def chart_rotations(self):
        """Array ``(len(flats) * n!, n, n)``: each flat under each axis ordering."""
        perms = [signed_permutation(p) for p in self.chambers]
        return np.array([f.rotation @ p for f in self.flats for p in perms])


def build_grid(n, delta, cell_cap=DEFAULT_CELL_CAP):
    """Product grid over canonical Givens angles.

    For n = 2 the single angle runs over ``[0, pi)`` (``-I`` acts trivially)
    in ``ceil(2*pi/delta)`` equal cells, i.e. effective step ``<= delta``.
    For larger n each plane uses effective step ``delta / C(n,2)`` so the
    composed relative rotation stays within ``delta``.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    chambers = [tuple(p) for p in itertools.permutations(range(n))]
    if math.isinf(delta):
        return DirectionGrid(n, delta, 1, [Flat.identity(n)],
                             [[GivensFactor(i, j, 0.0) for i, j in canonical_planes(n)]],
                             chambers)
    planes = canonical_planes(n)
    if n == 2:
        count = math.ceil(2 * math.pi / delta - 1e-12)
        if count > cell_cap:
            raise ResourceError(f"grid needs {count} cells, cap is {cell_cap}")
        axes = [np.arange(count) * (math.pi / count)]
    else:
        step = delta / (2 * len(planes))
        axes = []
        first_of_row = {i: (i, i + 1) for i in range(n - 1)}
        for plane in planes:
            if first_of_row[plane[0]] == plane:
                k = math.ceil(2 * math.pi / step)
                axes.append(-math.pi + (np.arange(k) + 0.5) * (2 * math.pi / k))
            else:
                k = math.ceil(math.pi / step) + 1
                axes.append(np.linspace(-math.pi / 2, math.pi / 2, k))
        count = math.prod(len(a) for a in axes)
        if count > cell_cap:
            raise ResourceError(f"grid needs {count} cells, cap is {cell_cap}")
    flats, provenance, seen = [], [], set()
    for combo in itertools.product(*axes):
        factors = [GivensFactor(i, j, float(a)) for (i, j), a in zip(planes, combo)]
        q = compose(factors, n)
        key = _flat_key(q)
        if key in seen:
            continue
        seen.add(key)
        flats.append(Flat(q))
        provenance.append(factors)
    return DirectionGrid(n, delta, count, flats, provenance, chambers)


def random_rotation(n, rng):
    """Haar-distributed rotation in SO(n)."""
    z = rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def nearest_chart(grid, q, candidates=8):
    """Index into ``grid.chart_rotations()`` and distance of the closest chart to ``q``."""
    charts = grid.chart_rotations()
    return _nearest(charts, np.asarray(q, dtype=float), candidates)


def _nearest(charts, q, candidates):
    n = q.shape[0]
    signs = _sign_group(n)
    flipped = charts[:, None, :, :] * signs[None, :, None, :]
    frob = np.abs(flipped - q).sum(axis=(-1, -2)).min(axis=1)
    order = np.argsort(frob, kind="stable")[:candidates]
    dists = _pair_distance(flipped[order], q[None, None]).min(axis=1)
    best = int(np.argmin(dists))
    return int(order[best]), float(dists[best])


def covering_audit(grid, samples, rng):
    """Largest distance from a random rotation to its nearest grid chart."""
    charts = grid.chart_rotations()
    worst = 0.0
    for _ in range(samples):
        q = random_rotation(grid.n, rng)
        worst = max(worst, _nearest(charts, q, 8)[1])
    return worst
