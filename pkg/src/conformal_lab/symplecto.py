"""Graph coordinates, generating functions and conformal points of area-preserving maps.

For a map ``F = (f, g)`` the graph point ``((x, y), (f, g))`` is sent to
``w1 = (u, v)``, the midpoint, and ``w2 = (u2, v2) = (g - y, x - f)``.  When ``F``
is area preserving, ``u2 du + v2 dv`` is closed, so ``H_u = g - y`` and
``H_v = x - f`` for a generating function ``H(u, v)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .errors import (BoundaryIdentityViolation, ClosednessViolation, DegenerateDenominator,
                     NewtonDivergence, NotIdentityOnBoundary, NotModerate, NotSymplecticAtProbe,
                     OrderTooLow)
from .fields import PlanarMap, ScalarField, VectorField, as_scalar_field, map_conformal_defect
from .index import _domain_samples, locate_zeros
from .jets import Jet2


# the linear graph transform -------------------------------------------------------------

@dataclass(frozen=True)
class GraphPoint:
    z1: tuple
    z2: tuple
    w1: tuple
    w2: tuple


def graph_transform(z1, z2):
    """``w1 = (z1 + z2) / 2`` and ``w2 = i (z1 - z2)``, both as real pairs."""
    x1, y1 = z1
    x2, y2 = z2
    w1 = ((x1 + x2) / 2, (y1 + y2) / 2)
    w2 = (-(y1 - y2), x1 - x2)
    return GraphPoint(tuple(z1), tuple(z2), w1, w2)


def graph_transform_inverse(w1, w2):
    (u1, v1), (u2, v2) = w1, w2
    z1 = (u1 + v2 / 2, v1 - u2 / 2)
    z2 = (u1 - v2 / 2, v1 + u2 / 2)
    return GraphPoint(z1, z2, tuple(w1), tuple(w2))


GRAPH_MATRIX = np.array([
    [0.5, 0.0, 0.5, 0.0],
    [0.0, 0.5, 0.0, 0.5],
    [0.0, -1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0, 0.0],
])  # (x1, y1, x2, y2) -> (u1, v1, u2, v2)


def _form(pairs, dim=4):
    m = np.zeros((dim, dim))
    for i, j, c in pairs:
        m[i, j] += c
        m[j, i] -= c
    return m


OMEGA_SOURCE = _form([(0, 1, 1.0), (2, 3, -1.0)])   # dx1^dy1 - dx2^dy2
OMEGA_TARGET = _form([(2, 0, 1.0), (3, 1, 1.0)])    # du2^du1 + dv2^dv1


def graph_pullback_residual():
    """``max |J^T Ω_target J - Ω_source|`` for the linear graph transform."""
    J = GRAPH_MATRIX
    return float(np.abs(J.T @ OMEGA_TARGET @ J - OMEGA_SOURCE).max())


# transversality ------------------------------------------------------------------------

def transversality_matrix(jac):
    """4x4 matrix whose determinant decides transversality of the graph to the fibers."""
    (fx, fy), (gx, gy) = np.asarray(jac, float)
    return np.array([
        [1.0, 0.0, fx, gx],
        [0.0, 1.0, fy, gy],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 1.0, 0.0, -1.0],
    ])


def transversality_residuals(jacobians, symplectic_tol=1e-8):
    """``|det M - (2 + f_x + g_y)|`` for a stack of 2x2 Jacobians of shape (N, 2, 2)."""
    jacobians = np.asarray(jacobians, float).reshape(-1, 2, 2)
    det2 = np.linalg.det(jacobians)
    bad = np.abs(det2 - 1.0) > symplectic_tol
    if bad.any():
        k = int(np.argmax(bad))
        raise NotSymplecticAtProbe(f"Jacobian {k} has determinant {det2[k]!r}")
    mats = np.array([transversality_matrix(j) for j in jacobians])
    det4 = np.linalg.det(mats)
    return np.abs(det4 - (2.0 + jacobians[:, 0, 0] + jacobians[:, 1, 1]))


def transversality_determinant_check(F, probes, symplectic_tol=1e-8):
    probes = np.asarray(probes, float).reshape(-1, 2)
    jac = F.jacobian(probes[:, 0], probes[:, 1])
    return float(transversality_residuals(np.moveaxis(jac, -1, 0), symplectic_tol).max())


@dataclass
class ModeratenessResult:
    value: float
    witness: tuple
    moderate: bool


def moderateness(F, domain, samples=4096, threshold=1e-6):
    """Minimum of ``|2 + f_x + g_y|`` over the domain (dense samples, then local search)."""
    if F.max_order < 1:
        raise OrderTooLow("moderateness needs first derivatives of the map")
    x, y = _domain_samples(domain, samples)

    def trace(px, py):
        jac = F.jacobian(px, py)
        return np.abs(2.0 + jac[0, 0] + jac[1, 1])

    vals = trace(x, y)
    k = int(np.argmin(vals))
    best, witness = float(vals[k]), (float(x[k]), float(y[k]))

    def objective(p):
        if not domain.contains(p[0], p[1]):
            return best + 1.0
        return float(trace(np.array([p[0]]), np.array([p[1]]))[0])

    opt = minimize(objective, np.array(witness), method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 400})
    if opt.fun < best and domain.contains(*opt.x):
        best, witness = float(opt.fun), (float(opt.x[0]), float(opt.x[1]))
    return ModeratenessResult(best, witness, best > threshold)


# midpoint map ----------------------------------------------------------------------------

def midpoint(F, x, y):
    v = F(x, y)
    return 0.5 * (x + v[0]), 0.5 * (y + v[1])


def invert_midpoint(F, u, v, tol=1e-12, max_iter=60, accept=1e-9):
    """Solve ``(p + F(p)) / 2 = (u, v)`` by damped Newton seeded at ``(u, v)``."""
    u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
    shape = u.shape
    u, v = u.ravel(), v.ravel()
    x, y = u.copy(), v.copy()
    active = np.arange(u.size)
    res = np.full(u.size, np.inf)
    for _ in range(max_iter):
        if not active.size:
            break
        xa, ya = x[active], y[active]
        val, jac = F.value_and_jacobian(xa, ya)
        rx = 0.5 * (xa + val[0]) - u[active]
        ry = 0.5 * (ya + val[1]) - v[active]
        r = np.hypot(rx, ry)
        res[active] = r
        m11, m12 = 0.5 * (1 + jac[0, 0]), 0.5 * jac[0, 1]
        m21, m22 = 0.5 * jac[1, 0], 0.5 * (1 + jac[1, 1])
        det = m11 * m22 - m12 * m21
        det = np.where(np.abs(det) < 1e-14, np.nan, det)
        dx = (m22 * rx - m12 * ry) / det
        dy = (-m21 * rx + m11 * ry) / det
        # damping: cap the step at the local scale of the domain
        step = np.hypot(dx, dy)
        scale = np.where(step > 0.5, 0.5 / np.maximum(step, 1e-300), 1.0)
        x[active] = xa - scale * dx
        y[active] = ya - scale * dy
        done = (r <= tol * np.maximum(1.0, np.hypot(u[active], v[active]))) | (step * scale <= 1e-14)
        done &= np.isfinite(step)
        active = active[~done]
    if active.size:
        val = F(x[active], y[active])
        res[active] = np.hypot(0.5 * (x[active] + val[0]) - u[active],
                               0.5 * (y[active] + val[1]) - v[active])
    bad = ~(res <= accept)
    if bad.any():
        k = int(np.argmax(bad))
        raise NewtonDivergence(f"midpoint inversion failed at (u, v) = ({u[k]:.6g}, {v[k]:.6g}) "
                               f"with residual {res[k]:.3e}", (float(u[k]), float(v[k])))
    return x.reshape(shape), y.reshape(shape)


def midpoint_diagnostics(F, domain, samples=2000, probes=200, K=4.0):
    """Report on the midpoint map: image inside the domain, injectivity, invertibility."""
    x, y = _domain_samples(domain, samples)
    mu, mv = midpoint(F, x, y)
    outside = ~domain.contains(mu, mv)
    if outside.any():
        outside &= domain.distance_to_boundary(mu, mv) > 1e-9
    spacing = np.sqrt(np.pi * (domain.diameter / 2) ** 2 / max(x.size, 1))
    delta = 0.25 * spacing
    tree = cKDTree(np.column_stack([mu, mv]))
    pairs = tree.query_pairs(delta, output_type="ndarray")
    if pairs.size:
        src = np.hypot(x[pairs[:, 0]] - x[pairs[:, 1]], y[pairs[:, 0]] - y[pairs[:, 1]])
        collisions = int(np.count_nonzero(src > K * delta))
    else:
        collisions = 0
    # targets are arbitrary domain points: the midpoint map must reach all of them
    pu, pv = _domain_samples(domain, probes)
    failures = []
    for i in range(pu.size):
        try:
            invert_midpoint(F, pu[i:i + 1], pv[i:i + 1])
        except NewtonDivergence as exc:
            failures.append(list(exc.location))
    return {
        "outside_count": int(np.count_nonzero(outside)),
        "injectivity_violations": collisions,
        "newton_failures": failures,
        "ok": not outside.any() and collisions == 0 and not failures,
    }


# generating function ----------------------------------------------------------------------

class GeneratingFunction:
    """Generating function ``H(u, v)`` of an area-preserving map, normalized by ``H(base) = 0``.

    The gradient is exact up to the midpoint inversion; values come from
    adaptive Gauss-Kronrod quadrature along axis-aligned staircases and second
    derivatives from central differences of the gradient.
    """

    def __init__(self, F, domain, base=None, tol=1e-10, fd_step=1e-4):
        self.F = F
        self.domain = domain
        self.base = tuple(domain.centroid) if base is None else tuple(base)
        self.tol = tol
        self.fd_step = fd_step
        self.closedness_residual = None
        self.boundary_gradient = None

    def gradient(self, u, v):
        x, y = invert_midpoint(self.F, u, v)
        val = self.F(x, y)
        return val[1] - y, x - val[0]

    def value(self, u, v, path="auto"):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        shape = u.shape
        u, v = u.ravel(), v.ravel()
        u0, v0 = self.base
        if path == "auto":
            horizontal = self.domain.contains(u, np.full_like(u, v0))
        else:
            horizontal = np.full(u.shape, path == "hx")
        # corner of the staircase: (u, v0) when moving horizontally first, else (u0, v)
        cu = np.where(horizontal, u, u0)
        cv = np.where(horizontal, v0, v)
        du1, dv1 = cu - u0, cv - v0
        du2, dv2 = u - cu, v - cv

        def integrand(s):
            pu = np.concatenate([u0 + s * du1, cu + s * du2])
            pv = np.concatenate([v0 + s * dv1, cv + s * dv2])
            hu, hv = self.gradient(pu, pv)
            return hu * np.concatenate([du1, du2]) + hv * np.concatenate([dv1, dv2])

        total, _err = quad_vec(integrand, 0.0, 1.0, epsabs=self.tol, epsrel=0.0,
                               norm="max", quadrature="gk15")
        n = u.size
        return (total[:n] + total[n:]).reshape(shape)

    def hessian(self, u, v):
        """Central-difference ``(H_uu, H_uv, H_vv)`` from the gradient."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        h = self.fd_step
        us = np.stack([u + h, u - h, u, u])
        vs = np.stack([v, v, v + h, v - h])
        hu, hv = self.gradient(us, vs)
        huu = (hu[0] - hu[1]) / (2 * h)
        hvv = (hv[2] - hv[3]) / (2 * h)
        huv = 0.5 * ((hu[2] - hu[3]) + (hv[0] - hv[1])) / (2 * h)
        return huu, huv, hvv

    def curl(self, u, v, h=1e-3):
        """``∂v H_u - ∂u H_v`` by central differences."""
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        us = np.stack([u + h, u - h, u, u])
        vs = np.stack([v, v, v + h, v - h])
        hu, hv = self.gradient(us, vs)
        return (hu[2] - hu[3]) / (2 * h) - (hv[0] - hv[1]) / (2 * h)

    @property
    def field(self):
        """:class:`ScalarField` view with jets up to order 2."""
        def evaluator(u, v, order):
            u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
            parts = {(0, 0): self.value(u, v)}
            if order >= 1:
                parts[(1, 0)], parts[(0, 1)] = self.gradient(u, v)
            if order >= 2:
                parts[(2, 0)], parts[(1, 1)], parts[(0, 2)] = self.hessian(u, v)
            return Jet2.from_partials(parts, order)
        return ScalarField(evaluator, 2, label=f"gen[{self.F.label}]")


def recover_generating_function(F, domain, base=None, tol=1e-10, probes=64,
                                closedness_tol=1e-5):
    """Build the generating function of ``F`` and record its closedness diagnostics."""
    gf = GeneratingFunction(F, domain, base, tol)
    x, y = _domain_samples(domain, probes)
    gf.closedness_residual = float(np.abs(gf.curl(x, y)).max())
    if gf.closedness_residual > closedness_tol:
        raise ClosednessViolation(f"curl of (H_u, H_v) reaches {gf.closedness_residual:.3e}; "
                                  "the map is not area preserving")
    bx, by = domain.curve.point(np.linspace(0.0, domain.curve.length, 100, endpoint=False))
    hu, hv = gf.gradient(bx, by)
    gf.boundary_gradient = float(np.hypot(hu, hv).max())
    return gf


def map_from_generating_function(H, tol=1e-13, max_iter=50):
    """Area-preserving map generated by ``H(u, v)`` through ``x = u + H_v/2``, ``y = v - H_u/2``."""
    H = as_scalar_field(H)
    if H.max_order < 2:
        raise OrderTooLow("map_from_generating_function needs second derivatives of H")

    def solve(x, y):
        u, v = x.copy(), y.copy()
        for _ in range(max_iter):
            j = H.jet(u, v, 2)
            rx = u + 0.5 * j[0, 1] - x
            ry = v - 0.5 * j[1, 0] - y
            a11, a12 = 1 + 0.5 * j[1, 1], 0.5 * j[0, 2]
            a21, a22 = -0.5 * j[2, 0], 1 - 0.5 * j[1, 1]
            det = a11 * a22 - a12 * a21
            du = (a22 * rx - a12 * ry) / det
            dv = (-a21 * rx + a11 * ry) / det
            u, v = u - du, v - dv
            if np.all(np.hypot(du, dv) <= tol * np.maximum(1.0, np.hypot(u, v))):
                break
        else:
            raise NewtonDivergence("graph relations did not converge")
        return u, v, H.jet(u, v, 2)

    def evaluator(x, y, order):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        u, v, j = solve(x, y)
        fparts = {(0, 0): 2 * u - x}
        gparts = {(0, 0): 2 * v - y}
        if order >= 1:
            # implicit differentiation: d(u, v)/d(x, y) = A^{-1}, DF = 2 A^{-1} - I
            a11, a12 = 1 + 0.5 * j[1, 1], 0.5 * j[0, 2]
            a21, a22 = -0.5 * j[2, 0], 1 - 0.5 * j[1, 1]
            det = a11 * a22 - a12 * a21
            fparts[(1, 0)] = 2 * a22 / det - 1
            fparts[(0, 1)] = -2 * a12 / det
            gparts[(1, 0)] = -2 * a21 / det
            gparts[(0, 1)] = 2 * a11 / det - 1
        return Jet2.from_partials(fparts, order), Jet2.from_partials(gparts, order)

    return PlanarMap(evaluator, 1, label=f"generated[{H.label}]", symplectic_claimed=True)


def derivative_relations_check(H, F, probes, denominator_tol=1e-8):
    """Largest residual of the four relations between ``DF`` and the Hessian of ``H``.

    ``probes`` are source points ``(x, y)``; the matching ``(u, v)`` is their midpoint.
    """
    probes = np.asarray(probes, float).reshape(-1, 2)
    x, y = probes[:, 0], probes[:, 1]
    val, jac = F.value_and_jacobian(x, y)
    u, v = 0.5 * (x + val[0]), 0.5 * (y + val[1])
    if isinstance(H, GeneratingFunction):
        a, b, c = H.hessian(u, v)
    else:
        j = as_scalar_field(H).jet(u, v, 2)
        a, b, c = j[2, 0], j[1, 1], j[0, 2]
    den = 4 - b * b + a * c
    if np.min(np.abs(den)) <= denominator_tol:
        raise DegenerateDenominator(f"4 - H_uv^2 + H_uu H_vv = {np.min(np.abs(den)):.3e}")
    fx, fy, gx, gy = jac[0, 0], jac[0, 1], jac[1, 0], jac[1, 1]
    residuals = [
        fx * den - (4 + b * b - a * c - 4 * b),
        fy * den + 4 * c,
        gx * den - 4 * a,
        gy * den - (4 + b * b - a * c + 4 * b),
    ]
    return float(max(np.abs(r).max() for r in residuals))


# conformal points --------------------------------------------------------------------------

def packed_defect(F, domain=None):
    """``((f_x - g_y), (f_y + g_x))`` composed with the inverse midpoint map.

    With a ``domain``, points outside it take the value at the nearest boundary
    point; the midpoint map need not be invertible out there, and the extension
    cannot vanish when the defect is nonzero along the boundary.
    """
    def func(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        if domain is not None:
            out = ~domain.contains(u, v)
            if out.any():
                u, v = u.copy(), v.copy()
                u[out], v[out] = domain.nearest_boundary_point(u[out], v[out])
        x, y = invert_midpoint(F, u, v)
        jac = F.jacobian(x, y)
        return np.stack([jac[0, 0] - jac[1, 1], jac[0, 1] + jac[1, 0]])
    return VectorField.from_function(func, label=f"packed[{F.label}]")


@dataclass
class MapConformalPoints:
    certificates: list
    boundary: object
    moderateness: ModeratenessResult
    boundary_fix_residual: float
    boundary_identity_residual: float
    consistency: bool = None
    warnings: list = field(default_factory=list)

    @property
    def degree_sum(self):
        return int(sum(c.degree for c in self.certificates))


def boundary_fix_residual(F, domain, n=100):
    t = np.linspace(0.0, domain.curve.length, n, endpoint=False)
    bx, by = domain.curve.point(t)
    img = F(bx, by)
    return float(np.hypot(img[0] - bx, img[1] - by).max())


def boundary_identity_residual(F, gf, domain, n=64):
    """Sup over boundary probes of ``|(f_y + g_x, g_y - f_x) - (H_uu - H_vv, 2 H_uv)|``."""
    t = np.linspace(0.0, domain.curve.length, n, endpoint=False)
    bx, by = domain.curve.point(t)
    jac = F.jacobian(bx, by)
    a, b, c = gf.hessian(bx, by)
    r1 = jac[0, 1] + jac[1, 0] - (a - c)
    r2 = jac[1, 1] - jac[0, 0] - 2 * b
    return float(np.hypot(r1, r2).max())


def conformal_points_of_map(F, domain, resolution=None, floor=None, identity_tol=1e-8,
                            identity_check_tol=1e-4, consistency=False):
    """Certified conformal points of a moderate area-preserving map fixing the boundary.

    The search runs in midpoint coordinates ``(u, v)`` on the packed defect field.
    """
    mod = moderateness(F, domain)
    if not mod.moderate:
        raise NotModerate(f"|2 + f_x + g_y| drops to {mod.value:.3e} at {mod.witness}")
    fix = boundary_fix_residual(F, domain)
    if fix > identity_tol:
        raise NotIdentityOnBoundary(f"map moves boundary points by up to {fix:.3e}")
    gf = GeneratingFunction(F, domain)
    ident = boundary_identity_residual(F, gf, domain)
    if ident > identity_check_tol:
        raise BoundaryIdentityViolation(f"boundary identity residual {ident:.3e}")
    V = packed_defect(F, domain)
    certs = locate_zeros(V, domain, resolution, floor)
    result = MapConformalPoints(list(certs), certs.boundary, mod, fix, ident,
                                warnings=list(certs.warnings))
    if F.fd_jets:
        result.warnings.append("second-order map jets from finite differences")
    if consistency:
        raw = locate_zeros(map_conformal_defect(F), domain, resolution, floor, polish=False)
        mapped = [midpoint(F, np.array([c.center[0]]), np.array([c.center[1]])) for c in raw]
        tol = 4 * max(c.half_width for c in list(raw) + list(certs)) if (raw or certs) else 0.0
        used = set()
        ok = len(raw) == len(certs) and raw.degree_sum == certs.degree_sum
        for (mu, mv), rc in zip(mapped, raw):
            match = [i for i, c in enumerate(certs) if i not in used
                     and abs(c.center[0] - mu[0]) <= tol and abs(c.center[1] - mv[0]) <= tol]
            if not match:
                ok = False
                break
            used.add(match[0])
        result.consistency = ok
    return result
