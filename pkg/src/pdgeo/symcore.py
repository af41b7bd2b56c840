"""Symmetric / SPD matrix numerics and the affine-invariant geometry of PD(n).

Points of PD(n) are plain ``(n, n)`` float arrays. Functions here never
mutate their inputs. The eigensolver is a cyclic Jacobi iteration with a
fixed sweep order, so results are reproducible bit-for-bit across runs.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, NumericalError

EPS = np.finfo(float).eps
MAX_SWEEPS = 60


def sym(a):
    """Return the symmetric part ``(a + a.T) / 2``."""
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + a.T)


def sym_eig(s, max_sweeps=MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    s : array_like, shape (n, n)
        Symmetric matrix. Only the upper triangle is read.
    max_sweeps : int
        Iteration cap on full sweeps over the off-diagonal.

    Returns
    -------
    rotation : ndarray, shape (n, n)
        Orthogonal matrix with determinant +1; columns are eigenvectors.
    eigenvalues : ndarray, shape (n,)
        Sorted in descending order.
    """
    a = np.array(s, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    n = a.shape[0]
    a = np.triu(a) + np.triu(a, 1).T
    v = np.eye(n)
    for sweep in range(max_sweeps + 1):
        converged = True
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                # relative-accuracy stopping rule (Demmel-Veselic)
                if abs(apq) <= EPS * np.sqrt(abs(app * aqq)) or abs(apq) < 1e-300:
                    a[p, q] = a[q, p] = 0.0
                    continue
                converged = False
                if sweep == max_sweeps:
                    raise NumericalError(
                        f"Jacobi eigensolver did not converge after {max_sweeps} sweeps"
                    )
                tau = (aqq - app) / (2.0 * apq)
                t = np.copysign(1.0, tau) / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                sn = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - sn * aq
                a[:, q] = sn * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - sn * aq
                a[q, :] = sn * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - sn * vq
                v[:, q] = sn * vp + c * vq
        if converged:
            break
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    if np.linalg.det(v) < 0:
        v[:, -1] = -v[:, -1]
    return v, w


def _eig_spd(p):
    v, w = sym_eig(p)
    n = len(w)
    if not w[-1] > n * EPS * w[0]:
        raise DomainError(
            f"matrix is not positive definite (min eigenvalue {w[-1]:.3e}, "
            f"max eigenvalue {w[0]:.3e})"
        )
    return v, w


def _spectral(v, w):
    return sym((v * w) @ v.T)


def check_spd(p, name="point"):
    """Validate and return ``p`` as a symmetric positive-definite float array.

    Raises :class:`DomainError` when ``p`` is not square, not symmetric to
    1e-8 relative, or has an eigenvalue at or below ``n * eps * max``.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
        raise DomainError(f"{name} must be a square matrix, got shape {p.shape}")
    scale = max(np.abs(p).max(), 1.0)
    if np.abs(p - p.T).max() > 1e-8 * scale:
        raise DomainError(f"{name} is not symmetric")
    _eig_spd(p)
    return sym(p)


def spd_log(p):
    """Matrix logarithm of an SPD matrix (the chart log at the identity)."""
    v, w = _eig_spd(p)
    return _spectral(v, np.log(w))


def spd_exp(s):
    """Matrix exponential of a symmetric matrix."""
    v, w = sym_eig(s)
    if w[0] > 700.0:
        raise NumericalError(f"matrix exponential overflows (eigenvalue {w[0]:.3g})")
    return _spectral(v, np.exp(w))


def spd_power(p, alpha):
    """``p ** alpha`` for SPD ``p`` and real ``alpha``."""
    v, w = _eig_spd(p)
    return _spectral(v, w**alpha)


def spd_sqrt(p):
    return spd_power(p, 0.5)


def spd_invsqrt(p):
    return spd_power(p, -0.5)


def congruence(g, p):
    """The isometric action ``g p g^T`` of GL(n) on PD(n)."""
    g = np.asarray(g, dtype=float)
    return sym(g @ np.asarray(p, dtype=float) @ g.T)


def _check_same_dim(p, q):
    if np.shape(p) != np.shape(q):
        raise DomainError(f"dimension mismatch: {np.shape(p)} vs {np.shape(q)}")


def metric_dist(p, q):
    """Affine-invariant distance ``||log(p^{-1/2} q p^{-1/2})||_F``."""
    _check_same_dim(p, q)
    r = spd_invsqrt(p)
    _, w = _eig_spd(congruence(r, q))
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def riemannian_norm(base, tangent):
    """Norm of a symmetric tangent vector at ``base``."""
    r = spd_invsqrt(base)
    return float(np.linalg.norm(congruence(r, tangent)))


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic ``c(t) = q^{1/2} exp(t q^{-1/2} A q^{-1/2}) q^{1/2}``.

    The tangent is normalized at construction, so ``c`` always has speed 1.
    """

    base: np.ndarray
    tangent: np.ndarray

    def __post_init__(self):
        base = check_spd(self.base, "geodesic base")
        tangent = sym(self.tangent)
        if tangent.shape != base.shape:
            raise DomainError("tangent and base point dimensions differ")
        norm = riemannian_norm(base, tangent)
        if not norm > 0:
            raise DomainError("geodesic tangent must be non-zero")
        tangent = tangent / norm
        base.setflags(write=False)
        tangent.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "tangent", tangent)

    @property
    def dim(self):
        return self.base.shape[0]

    def __call__(self, t):
        return geodesic_point(self, t)


def geodesic_point(c, t):
    """Evaluate the geodesic ``c`` at time ``t``."""
    root = spd_sqrt(c.base)
    iroot = spd_invsqrt(c.base)
    inner = congruence(iroot, c.tangent)
    return congruence(root, spd_exp(t * inner))


def log_map(p, q):
    """Riemannian log ``log_p(q)`` as a symmetric matrix in the tangent at ``p``."""
    _check_same_dim(p, q)
    root = spd_sqrt(p)
    iroot = spd_invsqrt(p)
    return congruence(root, spd_log(congruence(iroot, q)))


def geodesic_between(p, q):
    """Return ``(geodesic, length)`` with ``geodesic(0) = p`` and ``geodesic(length) = q``.

    For ``p == q`` the geodesic is ``None`` and the length is 0.
    """
    v = log_map(p, q)
    length = riemannian_norm(p, v)
    if length == 0.0:
        return None, 0.0
    return Geodesic(p, v), length


def interpolate(p, q, t):
    """Point at fraction ``t`` of the geodesic segment from ``p`` to ``q``."""
    root = spd_sqrt(p)
    iroot = spd_invsqrt(p)
    return congruence(root, spd_power(congruence(iroot, q), t))


def translate_to_identity(q, p):
    """Isometry ``p -> q^{-1/2} p q^{-1/2}`` sending ``q`` to the identity."""
    _check_same_dim(q, p)
    return congruence(spd_invsqrt(q), p)


def translate_from_identity(q, p):
    """Inverse of :func:`translate_to_identity`."""
    _check_same_dim(q, p)
    return congruence(spd_sqrt(q), p)


def geodesic_anisotropy(p):
    """Distance from ``p`` to the nearest scalar matrix, ``d(det(p)^{1/n} I, p)``."""
    _, w = _eig_spd(p)
    logs = np.log(w)
    return float(np.linalg.norm(logs - logs.mean()))
