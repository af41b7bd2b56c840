"""scikit-learn style wrappers around the hull and center builders.

Inputs are stacks of SPD matrices, shape ``(n_samples, n, n)``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import symcore
from .ballhull import CONTAIN_SLACK, build_eps_ball_hull, check_points
from .centerpt import DEFAULT_TOL, approx_horo_center
from .dirgrid import DEFAULT_CELL_CAP
from .exceptions import DomainError


def check_spd_array(X, n=None):
    """Validate ``X`` as an array of SPD matrices.

    Parameters
    ----------
    X : array_like, shape (n_samples, n, n)
    n : int, optional
        Required matrix size.

    Returns
    -------
    ndarray, shape (n_samples, n, n)
    """
    pts = check_points(X)
    if n is not None and pts.shape[1] != n:
        raise DomainError(f"expected {n}x{n} matrices, got {pts.shape[1]}x{pts.shape[2]}")
    return pts


class EpsilonBallHull(BaseEstimator):
    """epsilon-ball hull of a point set, used as a membership classifier.

    Parameters
    ----------
    epsilon : float, default=0.1
        Horoextent accuracy of the hull.
    origin : "auto", int or None, default="auto"
        Origin policy passed to the builder.
    cell_cap : int
        Grid cell cap.
    threads : int, default=1

    Attributes
    ----------
    hull_ : BallHull
    origin_ : ndarray, shape (n, n)
    d_X_ : float
    grid_ : DirectionGrid
    """

    def __init__(self, epsilon=0.1, origin="auto", cell_cap=DEFAULT_CELL_CAP, threads=1):
        self.epsilon = epsilon
        self.origin = origin
        self.cell_cap = cell_cap
        self.threads = threads

    def fit(self, X, y=None):
        pts = check_spd_array(X)
        self.hull_ = build_eps_ball_hull(pts, self.epsilon, self.origin, self.cell_cap,
                                         self.threads)
        self.origin_ = self.hull_.origin_shift
        self.d_X_ = self.hull_.d_X
        self.grid_ = self.hull_.grid
        self.n_features_in_ = pts.shape[1]
        return self

    def decision_function(self, X):
        """Largest horoball violation per point (non-positive inside)."""
        check_is_fitted(self, "hull_")
        return np.atleast_1d(self.hull_.violation(check_spd_array(X, self.n_features_in_)))

    def predict(self, X):
        """1 for points inside the hull, 0 otherwise."""
        return (self.decision_function(X) <= CONTAIN_SLACK).astype(int)


class HoroCenter(TransformerMixin, BaseEstimator):
    """epsilon-approximate horo-center point; ``transform`` recenters data on it.

    Parameters
    ----------
    epsilon : float, default=0.15
    origin : "auto", int or None, default="auto"
    tol : float
        Solver tolerance.
    cell_cap : int
    subset_cap : int, optional
    seed : int, default=0
        Recorded in the result.

    Attributes
    ----------
    center_ : ndarray, shape (n, n)
    result_ : CenterResult
    """

    def __init__(self, epsilon=0.15, origin="auto", tol=DEFAULT_TOL, cell_cap=DEFAULT_CELL_CAP,
                 subset_cap=None, seed=0):
        self.epsilon = epsilon
        self.origin = origin
        self.tol = tol
        self.cell_cap = cell_cap
        self.subset_cap = subset_cap
        self.seed = seed

    def fit(self, X, y=None):
        pts = check_spd_array(X)
        self.result_ = approx_horo_center(pts, self.epsilon, self.origin, self.tol, self.cell_cap,
                                          self.subset_cap, seed=self.seed)
        self.center_ = self.result_.point
        self.n_features_in_ = pts.shape[1]
        return self

    def transform(self, X):
        """Translate ``X`` so the fitted center sits at the identity."""
        check_is_fitted(self, "center_")
        pts = check_spd_array(X, self.n_features_in_)
        return np.array([symcore.translate_to_identity(self.center_, p) for p in pts])

    def inverse_transform(self, X):
        check_is_fitted(self, "center_")
        pts = check_spd_array(X, self.n_features_in_)
        return np.array([symcore.translate_from_identity(self.center_, p) for p in pts])
