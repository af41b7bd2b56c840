"""Flats, horospherical projection, Busemann functions, horoballs, horoextents.

A flat is stored as its rotation ``Q``: the flat is ``{Q diag(e^y) Q^T}``.
A :class:`Horofunction` is the normalized Busemann function of the ray
``t -> Q exp(t diag(sign * a)) Q^T`` with ``a`` strictly decreasing.  The
projection onto the flat factors ``Q^T p Q = nu f nu^T`` with ``nu`` unit
upper-triangular; the decreasing order of ``a`` is what makes that
unipotent group leave the Busemann function invariant.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import DomainError, NumericalError
from .symcore import check_spd, sym

DIRECTION_GAP = 1e-9


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def signed_permutation(perm):
    """Permutation matrix ``P`` with ``P[:, k] = e_{perm[k]}``, sign-fixed to det +1.

    Conjugating a diagonal matrix by ``P`` permutes its entries; the sign
    fix on the first column does not change that action.
    """
    perm = np.asarray(perm)
    n = len(perm)
    p = np.zeros((n, n))
    p[perm, np.arange(n)] = 1.0
    if np.linalg.det(p) < 0:
        p[:, 0] = -p[:, 0]
    return p


@dataclass(frozen=True)
class Flat:
    """An n-flat of PD(n), identified by a rotation in SO(n)."""

    rotation: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise DomainError(f"flat rotation must be square, got {q.shape}")
        n = q.shape[0]
        if np.abs(q.T @ q - np.eye(n)).max() > 1e-10:
            raise DomainError("flat rotation is not orthogonal")
        if abs(np.linalg.det(q) - 1.0) > 1e-10:
            raise DomainError("flat rotation must have determinant +1")
        object.__setattr__(self, "rotation", _frozen(q))

    @property
    def dim(self):
        return self.rotation.shape[0]

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n))

    def permuted(self, perm):
        """The same flat with its coordinate axes reordered by ``perm``."""
        return Flat(self.rotation @ signed_permutation(perm))

    def point(self, y):
        """The flat point with log-coordinates ``y``."""
        q = self.rotation
        return sym((q * np.exp(np.asarray(y, dtype=float))) @ q.T)


class HoroDecomposition(NamedTuple):
    """``Q^T p Q = unipotent @ diag(flat_part) @ unipotent.T``."""

    unipotent: np.ndarray
    flat_part: np.ndarray


def _to_frame(points, rotation):
    # I + Q^T (p - I) Q maps the identity to exactly the identity
    n = rotation.shape[0]
    eye = np.eye(n)
    d = points - eye
    out = np.einsum("ji,...jk,kl->...il", rotation, d, rotation) + eye
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def _ldl_upper(h, want_unipotent):
    """Recursive trailing Schur complements on a stack of SPD matrices."""
    h = np.array(h, dtype=float)
    n = h.shape[-1]
    f = np.empty(h.shape[:-1])
    nu = None
    if want_unipotent:
        nu = np.broadcast_to(np.eye(n), h.shape).copy()
    for k in range(n - 1, -1, -1):
        pivot = h[..., k, k]
        if not np.all(pivot > 0):
            raise NumericalError("horospherical projection lost positivity")
        f[..., k] = pivot
        if k == 0:
            break
        col = h[..., :k, k] / pivot[..., None]
        if want_unipotent:
            nu[..., :k, k] = col
        h = h[..., :k, :k] - col[..., :, None] * h[..., None, :k, k]
    return nu, f


def horo_project(p, flat):
    """Horospherical decomposition of ``p`` relative to ``flat``.

    Rotates ``p`` into the flat's diagonal frame and splits off trailing
    1x1 blocks by Schur complements, yielding ``Q^T p Q = nu f nu^T``.
    """
    p = check_spd(p)
    if p.shape[0] != flat.dim:
        raise DomainError("point and flat dimensions differ")
    nu, f = _ldl_upper(_to_frame(p, flat.rotation), want_unipotent=True)
    return HoroDecomposition(nu, f)


def chart_coords(points, rotation):
    """Log-coordinates of the horospherical projections of many points.

    Parameters
    ----------
    points : ndarray, shape (..., n, n)
    rotation : ndarray, shape (n, n)

    Returns
    -------
    ndarray, shape (..., n)
        ``log diag f`` for each point.
    """
    points = np.asarray(points, dtype=float)
    _, f = _ldl_upper(_to_frame(points, np.asarray(rotation, dtype=float)), False)
    return np.log(f)


@dataclass(frozen=True)
class Horofunction:
    """Normalized Busemann function of a geodesic ray through the identity.

    Parameters
    ----------
    flat : Flat
    direction : array_like, shape (n,)
        Unit vector with strictly decreasing entries (the diagonal of A).
    sign : {+1, -1}
        ``-1`` selects the ray run backwards, ``t -> Q exp(-t A) Q^T``.
    """

    flat: Flat
    direction: np.ndarray
    sign: int = 1

    def __post_init__(self):
        a = np.asarray(self.direction, dtype=float)
        if a.shape != (self.flat.dim,):
            raise DomainError(f"direction must have shape ({self.flat.dim},)")
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > 1e-9:
            raise DomainError(
                f"direction must be a unit vector (norm {norm:.6g}); divide by its norm"
            )
        a = a / norm
        if np.any(np.diff(a) >= -DIRECTION_GAP):
            raise DomainError(
                "direction entries must be strictly decreasing with gap > 1e-9; "
                "sort them and permute the flat rotation accordingly"
            )
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        object.__setattr__(self, "direction", _frozen(a))

    @classmethod
    def from_vector(cls, flat, vector, sign=1):
        v = np.asarray(vector, dtype=float)
        return cls(flat, v / np.linalg.norm(v), sign)

    @property
    def dim(self):
        return self.flat.dim

    def reversed(self):
        return Horofunction(self.flat, self.direction, -self.sign)

    def canonical(self):
        """Equivalent ``(rotation, direction)`` with the sign folded in.

        The backwards ray has direction ``-a``, which is increasing; the
        order-reversing permutation restores decreasing order.
        """
        if self.sign == 1:
            return self.flat.rotation, self.direction
        n = self.dim
        rev = signed_permutation(np.arange(n)[::-1])
        return self.flat.rotation @ rev, -self.direction[::-1]

    def tangent(self):
        """Unit tangent ``sign * Q diag(a) Q^T`` of the ray at the identity."""
        q = self.flat.rotation
        return sym((q * (self.sign * self.direction)) @ q.T)

    def ray_point(self, t):
        """``c(t)`` for the underlying ray."""
        q = self.flat.rotation
        return sym((q * np.exp(t * self.sign * self.direction)) @ q.T)

    def __call__(self, points):
        return busemann(self, points)


def busemann(h, points):
    """Busemann function ``-tr(A log pi_F(p))`` at one point or a stack of points."""
    points = np.asarray(points, dtype=float)
    if points.shape[-1] != h.dim:
        raise DomainError("point and horofunction dimensions differ")
    rotation, a = h.canonical()
    y = chart_coords(points, rotation)
    values = -(y @ a)
    if points.ndim == 2:
        return float(values)
    return values


def busemann_rotated(h, rot, p):
    """Busemann function of ``h`` with its flat rotated to ``Q @ rot``.

    Evaluated by rotating the point instead of the flat:
    ``b_{h'}(p) = b_h(M^T p M)`` with ``M = Q rot Q^T``.
    """
    rot = np.asarray(rot, dtype=float)
    q = h.flat.rotation
    m = q @ rot @ q.T
    p = np.asarray(p, dtype=float)
    moved = np.einsum("ji,...jk,kl->...il", m, p, m)
    return busemann(h, 0.5 * (moved + np.swapaxes(moved, -1, -2)))


def with_rotation(h, rot):
    """``h`` with its flat rotation composed on the right by ``rot``."""
    return Horofunction(Flat(h.flat.rotation @ rot), h.direction, h.sign)


def horoextent(h, points):
    """Horoextent ``|max b_+ + max b_-|`` of a point set along ``h``'s geodesic."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 2:
        points = points[None]
    if len(points) == 0:
        raise DomainError("horoextent of an empty set")
    plus = Horofunction(h.flat, h.direction, 1)
    return float(abs(np.max(busemann(plus, points)) + np.max(busemann(plus.reversed(), points))))


def busemann_descent(h, p, step):
    """Move ``p`` a distance ``step`` along the ray asymptotic to ``h``'s ideal point.

    This is the steepest-descent geodesic of ``h`` (its gradient has unit
    norm), so the Busemann value drops by exactly ``step``.
    """
    rotation, a = h.canonical()
    nu, f = _ldl_upper(_to_frame(np.asarray(p, dtype=float), rotation), True)
    inner = (nu * (f * np.exp(step * a))) @ nu.T
    out = rotation @ inner @ rotation.T
    return sym(out)


@dataclass(frozen=True)
class Horoball:
    """Sublevel set ``{p : b(p) <= level}`` of a horofunction."""

    horofunction: Horofunction
    level: float

    def value(self, points):
        """Signed violation ``b(p) - level`` (non-positive inside)."""
        return busemann(self.horofunction, points) - self.level

    def contains(self, points, slack=1e-12):
        return np.asarray(self.value(points)) <= slack
