"""scikit-learn style wrappers around the zero search.

The "training data" of these estimators is the object being analysed (a
Hamiltonian or a support function); ``transform`` and ``predict`` then act on
arrays of query points.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .domain import PlanarDomain
from .fields import ScalarField, conformal_defect, loewner_field, riemannian_defect
from .index import locate_zeros
from .sphere import SupportFunction, find_umbilics, first_harmonic_defect


class ConformalPointLocator(BaseEstimator, TransformerMixin):
    """Certified zeros of a defect field built from a Hamiltonian.

    Parameters
    ----------
    domain : PlanarDomain, optional
        Search domain; the unit disc when omitted.
    kind : {"conformal", "loewner", "riemannian"}
        Which defect field to build from ``H``.
    n : int
        Order of the Loewner field (``kind="loewner"`` only).
    gfac : str, optional
        Conformal factor expression (``kind="riemannian"`` only).
    resolution, floor : float, optional
        Passed to :func:`~conformal_lab.index.locate_zeros`.

    Attributes
    ----------
    field_ : VectorField
    certificates_ : CertificateSet
    boundary_winding_ : int
    degree_sum_ : int
    """

    def __init__(self, domain=None, kind="conformal", n=2, gfac=None, resolution=None,
                 floor=None):
        self.domain = domain
        self.kind = kind
        self.n = n
        self.gfac = gfac
        self.resolution = resolution
        self.floor = floor

    def _build(self, H):
        H = H if isinstance(H, ScalarField) else ScalarField.from_expression(H)
        if self.kind == "conformal":
            return conformal_defect(H)
        if self.kind == "loewner":
            return loewner_field(H, self.n)
        if self.kind == "riemannian":
            return riemannian_defect(H, self.gfac or "(1 + x^2 + y^2)^2 / 4")
        raise ValueError(f"unknown kind {self.kind!r}")

    def fit(self, H, y=None):
        """Locate and certify the zeros of the defect field of ``H``."""
        self.domain_ = self.domain if self.domain is not None else PlanarDomain.disc()
        self.field_ = self._build(H)
        self.certificates_ = locate_zeros(self.field_, self.domain_, self.resolution, self.floor)
        self.boundary_winding_ = int(self.certificates_.boundary.value)
        self.degree_sum_ = self.certificates_.degree_sum
        self.zeros_ = np.array([c.location for c in self.certificates_]).reshape(-1, 2)
        self.degrees_ = np.array([c.degree for c in self.certificates_], dtype=int)
        return self

    def transform(self, X):
        """Field values at the rows of ``X`` (shape (n, 2))."""
        check_is_fitted(self, "field_")
        X = check_array(X)
        return self.field_(X[:, 0], X[:, 1]).T

    def predict(self, X):
        """Index of the certificate box containing each point, or -1."""
        check_is_fitted(self, "certificates_")
        X = check_array(X)
        labels = np.full(X.shape[0], -1)
        for k, c in enumerate(self.certificates_):
            x0, y0, x1, y1 = c.box
            inside = (X[:, 0] >= x0) & (X[:, 0] <= x1) & (X[:, 1] >= y0) & (X[:, 1] <= y1)
            labels[inside & (labels < 0)] = k
        return labels


class UmbilicFinder(BaseEstimator, TransformerMixin):
    """Umbilic normals of a convex body given by its support function."""

    def __init__(self, resolution=None, floor=None, seed=0):
        self.resolution = resolution
        self.floor = floor
        self.seed = seed

    def fit(self, support, y=None):
        if not isinstance(support, SupportFunction):
            support = SupportFunction(support)
        self.support_ = support
        res = find_umbilics(support, self.resolution, self.floor, seed=self.seed)
        self.result_ = res
        self.normals_ = np.array([u.normal for u in res.umbilics]).reshape(-1, 3)
        self.degrees_ = np.array([u.degree for u in res.umbilics], dtype=int)
        self.degree_sum_ = res.degree_sum
        return self

    def transform(self, S):
        """First-harmonic defect at each unit vector (rows of ``S``), shape (n, 1)."""
        check_is_fitted(self, "support_")
        S = check_array(S)
        return np.array([[first_harmonic_defect(self.support_, s)] for s in S])
