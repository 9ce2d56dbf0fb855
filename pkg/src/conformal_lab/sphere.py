"""Support functions on the unit sphere, stereographic charts and umbilic search.

A support function is an expression in ``X, Y, Z`` restricted to the unit
sphere.  Two stereographic charts cover the sphere:

* ``north``: ``(x, y) -> (2x, 2y, r^2 - 1) / (1 + r^2)``, the origin maps to ``(0, 0, -1)``;
* ``south``: ``(x, y) -> (2x, 2y, 1 - r^2) / (1 + r^2)``, the origin maps to ``(0, 0, 1)``.

Both pull the round metric back to ``(dx^2 + dy^2) / gfac`` with
``gfac = (1 + r^2)^2 / 4``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .domain import PlanarDomain
from .errors import DomainError, FieldVanishesOnCurve, SeamZero
from .expr import Expression, parse
from .fields import ScalarField, riemannian_defect
from .index import locate_zeros
from .jets import DEFAULT_MAX_ORDER, Jet2

GFAC = "(1 + x^2 + y^2)^2 / 4"


class SupportFunction:
    """Support function ``H(X, Y, Z)``; ``rotation`` evaluates ``H(R s)`` instead of ``H(s)``."""

    def __init__(self, expression, params=None, rotation=None, label=None):
        if not isinstance(expression, Expression):
            expression = parse(expression, ("X", "Y", "Z"))
        self.expression = expression
        self.params = dict(params or {})
        self.rotation = None if rotation is None else np.asarray(rotation, float)
        self.label = label or str(expression)

    @classmethod
    def ellipsoid(cls, a2, b2, c2):
        """Support function of ``x^2/a2 + y^2/b2 + z^2/c2 = 1``."""
        a2, b2, c2 = float(a2), float(b2), float(c2)
        return cls(f"sqrt({a2!r}*X^2 + {b2!r}*Y^2 + {c2!r}*Z^2)",
                   {"kind": "ellipsoid", "axes2": (float(a2), float(b2), float(c2))},
                   label=f"ellipsoid({a2!r}, {b2!r}, {c2!r})")

    @classmethod
    def sphere(cls, radius=1.0):
        return cls(repr(float(radius)), {"kind": "ellipsoid", "axes2": (radius ** 2,) * 3},
                   label=f"sphere({radius!r})")

    def rotated(self, R):
        R = np.asarray(R, float)
        total = R if self.rotation is None else self.rotation @ R
        return SupportFunction(self.expression, self.params, total, self.label)

    def evaluate_jets(self, X, Y, Z):
        if self.rotation is not None:
            R = self.rotation
            X, Y, Z = (R[0, 0] * X + R[0, 1] * Y + R[0, 2] * Z,
                       R[1, 0] * X + R[1, 1] * Y + R[1, 2] * Z,
                       R[2, 0] * X + R[2, 1] * Y + R[2, 2] * Z)
        return self.expression.evaluate({"X": X, "Y": Y, "Z": Z})

    def __call__(self, s):
        s = np.asarray(s, float)
        if self.rotation is not None:
            s = np.tensordot(self.rotation, s, axes=1)
        return self.expression(s[0], s[1], s[2])

    def __repr__(self):
        return f"SupportFunction({self.label!r})"


class StereoChart:
    def __init__(self, pole="north", working_radius=2.0):
        if pole not in ("north", "south"):
            raise ValueError("pole must be 'north' or 'south'")
        self.pole = pole
        self.sign = 1.0 if pole == "north" else -1.0
        self.working_radius = working_radius
        self.gfac = ScalarField.from_expression(GFAC)

    def embed_jets(self, x, y, order):
        xv = Jet2.variable(0, x, y, order)
        yv = Jet2.variable(1, x, y, order)
        r2 = xv * xv + yv * yv
        inv = (r2 + 1.0).reciprocal()
        return xv * inv * 2.0, yv * inv * 2.0, (r2 - 1.0) * inv * self.sign

    def to_sphere(self, x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        r2 = x * x + y * y
        return np.stack([2 * x, 2 * y, self.sign * (r2 - 1)]) / (1 + r2)

    def from_sphere(self, s):
        s = np.asarray(s, float)
        den = 1.0 - self.sign * s[2]
        return s[0] / den, s[1] / den

    def other(self):
        return StereoChart("south" if self.pole == "north" else "north", self.working_radius)

    def __repr__(self):
        return f"StereoChart({self.pole!r})"


def chart_for(s):
    """Chart in which ``s`` lies inside the unit disc."""
    return StereoChart("north" if np.asarray(s, float)[2] <= 0 else "south")


def chart_pullback(Hs, chart, max_order=DEFAULT_MAX_ORDER):
    def evaluator(x, y, order):
        return Hs.evaluate_jets(*chart.embed_jets(x, y, order))
    return ScalarField(evaluator, max_order, label=f"{Hs.label}@{chart.pole}")


def umbilic_defect(Hs, chart):
    return riemannian_defect(chart_pullback(Hs, chart), chart.gfac)


# surface reconstruction and oracles ---------------------------------------------------------

def _chart_frame(Hs, s, order):
    s = np.asarray(s, float)
    chart = chart_for(s)
    x, y = chart.from_sphere(s)
    X, Y, Z = chart.embed_jets(x, y, order)
    return chart, x, y, (X, Y, Z), Hs.evaluate_jets(X, Y, Z)


def support_to_surface(Hs, s):
    """Gradient of the 1-homogeneous extension of ``Hs`` at the unit vector ``s``."""
    s = np.asarray(s, float)
    s = s / np.linalg.norm(s)
    chart, x, y, (X, Y, Z), h = _chart_frame(Hs, s, 1)
    g = float(chart.gfac(x, y))
    px = np.array([X[1, 0], Y[1, 0], Z[1, 0]], float)
    py = np.array([X[0, 1], Y[0, 1], Z[0, 1]], float)
    value = float(np.real(h.value))
    tangential = g * (float(h[1, 0]) * px + float(h[0, 1]) * py)
    return value * s + tangential


def first_harmonic_defect(Hs, s):
    """Traceless part of the chart Hessian of ``Hs - l0`` at ``s``, in metric units.

    ``l0(P) = <p, P>`` with ``p`` the support point, the first harmonic that
    agrees with ``Hs`` to first order at ``s``.
    """
    s = np.asarray(s, float)
    s = s / np.linalg.norm(s)
    p = support_to_surface(Hs, s)
    chart, x, y, (X, Y, Z), h = _chart_frame(Hs, s, 2)
    d = h - (X * p[0] + Y * p[1] + Z * p[2])
    g = float(chart.gfac(x, y))
    return g * float(np.hypot(0.5 * (d[2, 0] - d[0, 2]), d[1, 1]))


def principal_gap_oracle(Hs, s):
    """``|κ1 - κ2|`` of the implicit ellipsoid at the point with outward normal ``s``."""
    if Hs.params.get("kind") != "ellipsoid":
        raise DomainError("principal_gap_oracle needs an implicitly known ellipsoid")
    s = np.asarray(s, float)
    s = s / np.linalg.norm(s)
    if Hs.rotation is not None:
        s = Hs.rotation @ s
    A = np.diag(Hs.params["axes2"])
    p = A @ s / np.sqrt(s @ A @ s)
    grad = 2 * np.linalg.solve(A, p)
    hess = 2 * np.linalg.inv(A)
    n = grad / np.linalg.norm(grad)
    # orthonormal tangent basis
    e1 = np.cross(n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    T = np.column_stack([e1, e2])
    shape = T.T @ hess @ T / np.linalg.norm(grad)
    k = np.linalg.eigvalsh(shape)
    return float(abs(k[1] - k[0]))


# umbilic search --------------------------------------------------------------------------

@dataclass
class Umbilic:
    normal: tuple
    surface_point: tuple
    chart: str
    chart_location: tuple
    degree: int
    line_index: float

    def to_dict(self):
        return {"normal": list(self.normal), "surface_point": list(self.surface_point),
                "chart": self.chart, "chart_location": list(self.chart_location),
                "degree": self.degree, "line_index": self.line_index}


@dataclass
class UmbilicResult:
    umbilics: list
    chart_windings: dict
    retries: int = 0
    rotation: np.ndarray = None
    warnings: list = field(default_factory=list)

    @property
    def degree_sum(self):
        return int(sum(u.degree for u in self.umbilics))

    @property
    def line_index_sum(self):
        return float(sum(u.line_index for u in self.umbilics))


def _random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def _search(Hs, radius, resolution, floor, seam_band):
    disc = PlanarDomain.disc((0.0, 0.0), radius)
    found = []
    windings = {}
    for chart in (StereoChart("north"), StereoChart("south")):
        certs = locate_zeros(umbilic_defect(Hs, chart), disc, resolution, floor)
        windings[chart.pole] = int(certs.boundary.value)
        for c in certs:
            x, y = c.location
            r = np.hypot(x, y)
            if abs(r - 1.0) < seam_band:
                raise SeamZero(f"zero at chart radius {r:.6g} in the {chart.pole} chart")
            # each point of the sphere lies inside the unit circle of exactly one chart
            if r < 1.0:
                found.append((chart, c))
    return found, windings


def find_umbilics(Hs, resolution=None, floor=None, radius=1.2, seed=0, max_retries=3,
                  seam_band=None):
    """Umbilic normals of the body with support function ``Hs``.

    Zeros of the Riemannian defect are searched in both charts on the disc of the
    given radius; each chart keeps only zeros inside the unit circle.
    """
    rng = np.random.default_rng(seed)
    R = np.eye(3)
    current = Hs
    seam_band = (20 * (resolution or 1e-4 * 2 * radius)) if seam_band is None else seam_band
    for attempt in range(max_retries + 1):
        try:
            kept, windings = _search(current, radius, resolution, floor, seam_band)
            break
        except (SeamZero, FieldVanishesOnCurve):
            if attempt == max_retries:
                raise
            Q = _random_rotation(rng)
            R = R @ Q
            current = Hs.rotated(R)
    umbilics = []
    for chart, c in kept:
        x, y = c.location
        s_rot = chart.to_sphere(x, y)
        s = R @ s_rot
        umbilics.append(Umbilic(tuple(float(v) for v in s),
                                tuple(float(v) for v in support_to_surface(Hs, s)),
                                chart.pole, (float(x), float(y)), int(c.degree), c.degree / 2))
    # deduplicate on the sphere
    unique = []
    tol = 2 * (resolution or 1e-4 * 2 * radius)
    for u in umbilics:
        if all(np.linalg.norm(np.subtract(u.normal, v.normal)) >= tol for v in unique):
            unique.append(u)
    unique.sort(key=lambda u: tuple(np.round(u.normal, 9)))
    return UmbilicResult(unique, windings, attempt, R)
