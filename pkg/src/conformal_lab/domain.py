"""Planar domains, their boundary curves and the tubular (t, s) collar.

Curves are normalized to counterclockwise orientation; ``t`` is arc length and
``s`` the signed distance along the inward normal ``n = (-sin α, cos α)``, so a
convex boundary has positive curvature.
"""
from __future__ import annotations

import numpy as np
from matplotlib.path import Path
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import PchipInterpolator

from .errors import (BoundaryJetNotFlat, DegenerateTangent, NotConstantOnBoundary,
                     OrderTooLow, OutsideCollar)
from .expr import Expression, parse
from .fields import as_scalar_field
from .jets import Jet2, compose

TWO_PI = 2.0 * np.pi
_GL_X, _GL_W = leggauss(10)


class BoundaryCurve:
    """Closed curve ``p(tau)``, ``tau in [0, 1)``, with an arc-length table."""

    def __init__(self, x_expr, y_expr, label="curve", spec=None):
        if not isinstance(x_expr, Expression):
            x_expr = parse(x_expr, ("tau",))
        if not isinstance(y_expr, Expression):
            y_expr = parse(y_expr, ("tau",))
        self.x_expr = x_expr
        self.y_expr = y_expr
        self.label = label
        self.spec = spec or {"kind": "parametric", "x": str(x_expr), "y": str(y_expr)}
        self.reversed = False
        if self._signed_area() < 0:
            self.reversed = True
        self._build_table()

    # constructors -------------------------------------------------------------------
    @classmethod
    def circle(cls, center=(0.0, 0.0), radius=1.0):
        cx, cy = (float(c) for c in center)
        r = float(radius)
        return cls(f"{cx!r} + {r!r}*cos({TWO_PI!r}*tau)", f"{cy!r} + {r!r}*sin({TWO_PI!r}*tau)",
                   label=f"circle(({cx:g}, {cy:g}), {r:g})",
                   spec={"kind": "circle", "center": [cx, cy], "radius": r})

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        cx, cy = (float(c) for c in center)
        a, b = float(a), float(b)
        return cls(f"{cx!r} + {a!r}*cos({TWO_PI!r}*tau)", f"{cy!r} + {b!r}*sin({TWO_PI!r}*tau)",
                   label=f"ellipse({a:g}, {b:g})",
                   spec={"kind": "ellipse", "a": a, "b": b, "center": [cx, cy]})

    @classmethod
    def parametric(cls, x_text, y_text):
        return cls(x_text, y_text, label=f"({x_text}, {y_text})")

    # raw parameterization -------------------------------------------------------------
    def tau_jets(self, tau, order):
        """Jets in ``tau`` of both coordinates; entry ``(k, 0)`` is the k-th derivative."""
        tau = np.asarray(tau, float)
        var = Jet2.variable(0, tau, 0.0, order)
        if self.reversed:
            var = 1.0 - var
        env = {"tau": var}
        return self.x_expr.evaluate(env), self.y_expr.evaluate(env)

    def point_tau(self, tau):
        x, y = self.tau_jets(tau, 0)
        return np.stack([x.value, y.value])

    def _speed(self, tau):
        x, y = self.tau_jets(tau, 1)
        return np.hypot(x[1, 0], y[1, 0])

    def _signed_area(self):
        tau = np.linspace(0.0, 1.0, 2048, endpoint=False)
        x, y = self.point_tau(tau)
        return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)

    def _panel_lengths(self, n):
        edges = np.linspace(0.0, 1.0, n + 1)
        half = 0.5 / n
        nodes = (edges[:-1, None] + half) + half * _GL_X[None, :]
        return (self._speed(nodes) * _GL_W[None, :]).sum(axis=1) * half

    def _build_table(self):
        n = 256
        lengths = self._panel_lengths(n)
        while n < 4096:
            finer = self._panel_lengths(2 * n)
            converged = abs(finer.sum() - lengths.sum()) <= 1e-10 * finer.sum()
            n, lengths = 2 * n, finer
            if converged:
                break
        self.n_panels = n
        self.table_tau = np.linspace(0.0, 1.0, n + 1)
        self.table_t = np.concatenate([[0.0], np.cumsum(lengths)])
        self.length = float(self.table_t[-1])
        if np.any(np.diff(self.table_t) <= 0):
            raise DegenerateTangent("arc-length table is not strictly increasing")
        self._tau_guess = PchipInterpolator(self.table_t, self.table_tau)
        x, y = self.tau_jets(self.table_tau, 1)
        dx, dy = x[1, 0], y[1, 0]
        if np.min(np.hypot(dx, dy)) < 1e-10:
            raise DegenerateTangent("tangent vanishes at a table node")
        self.table_alpha = np.unwrap(np.arctan2(dy, dx))

    def _arclength_tau(self, tau):
        p = np.clip(np.floor(tau * self.n_panels).astype(int), 0, self.n_panels - 1)
        a = self.table_tau[p]
        half = 0.5 * (tau - a)
        nodes = (a + half)[..., None] + half[..., None] * _GL_X
        partial = (self._speed(nodes) * _GL_W).sum(axis=-1) * half
        return self.table_t[p] + partial

    def tau_of_t(self, t):
        t = np.mod(np.asarray(t, float), self.length)
        tau = np.clip(self._tau_guess(t), 0.0, 1.0)
        for _ in range(3):
            tau = tau - (self._arclength_tau(tau) - t) / self._speed(tau)
            tau = np.clip(tau, 0.0, 1.0)
        return tau

    # arc-length quantities -------------------------------------------------------------
    def derivatives_t(self, t, order):
        """``d^k γ / dt^k`` for ``k = 0..order``; shape ``(order + 1, 2) + t.shape``."""
        tau = self.tau_of_t(t)
        xj, yj = self.tau_jets(tau, order)
        speed = (xj.dx() * xj.dx() + yj.dx() * yj.dx()).sqrt() if order >= 1 else None
        out = [np.stack([xj.value, yj.value])]
        qx, qy = xj, yj
        if order >= 1:
            inv = speed.reciprocal()
            for _ in range(order):
                qx = qx.dx() * inv.truncate(qx.order - 1)
                qy = qy.dx() * inv.truncate(qy.order - 1)
                out.append(np.stack([qx.value, qy.value]))
        return np.stack(out)

    def point(self, t):
        return self.point_tau(self.tau_of_t(t))

    def curvature_and_angle(self, t):
        """Curvature ``k`` and continuous tangent angle ``α`` at arc length ``t``.

        ``α`` is lifted continuously from ``α(0) in (-π, π]``; values of ``t``
        beyond ``L`` keep lifting, so ``α(t + L) = α(t) + 2π``.
        """
        t = np.asarray(t, float)
        laps = np.floor(t / self.length)
        tau = self.tau_of_t(t)
        xj, yj = self.tau_jets(tau, 2)
        dx, dy, ddx, ddy = xj[1, 0], yj[1, 0], xj[2, 0], yj[2, 0]
        speed = np.hypot(dx, dy)
        if np.any(speed < 1e-10):
            raise DegenerateTangent("tangent vanishes")
        k = (dx * ddy - dy * ddx) / speed ** 3
        raw = np.arctan2(dy, dx)
        approx = np.interp(tau, self.table_tau, self.table_alpha)
        alpha = raw + TWO_PI * np.round((approx - raw) / TWO_PI) + TWO_PI * laps
        return k, alpha

    def total_turning(self):
        """``∫ k dt`` over one loop, integrated panel by panel."""
        edges = self.table_tau
        half = 0.5 * np.diff(edges)
        nodes = (edges[:-1] + half)[:, None] + half[:, None] * _GL_X[None, :]
        xj, yj = self.tau_jets(nodes, 2)
        dx, dy, ddx, ddy = xj[1, 0], yj[1, 0], xj[2, 0], yj[2, 0]
        integrand = (dx * ddy - dy * ddx) / (dx * dx + dy * dy)
        return float(((integrand * _GL_W).sum(axis=1) * half).sum())

    def polygon(self, n=4096):
        return self.point_tau(np.linspace(0.0, 1.0, n, endpoint=False)).T

    def max_abs_curvature(self, n=4096):
        t = np.linspace(0.0, self.length, n, endpoint=False)
        return float(np.max(np.abs(self.curvature_and_angle(t)[0])))

    def __repr__(self):
        return f"BoundaryCurve({self.label})"


class PlanarDomain:
    """Simply connected domain bounded by a :class:`BoundaryCurve`."""

    def __init__(self, curve):
        self.curve = curve
        poly = curve.polygon()
        self._path = Path(poly)
        self._poly = poly
        lo, hi = poly.min(axis=0), poly.max(axis=0)
        self.bbox = (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
        self.diameter = float(np.hypot(hi[0] - lo[0], hi[1] - lo[1]))
        self.centroid = self._centroid()

    @classmethod
    def disc(cls, center=(0.0, 0.0), radius=1.0):
        return cls(BoundaryCurve.circle(center, radius))

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        return cls(BoundaryCurve.ellipse(a, b, center))

    def _centroid(self):
        x, y = self._poly.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2
        return (float(((x + xn) * cross).sum() / (6 * area)),
                float(((y + yn) * cross).sum() / (6 * area)))

    def contains(self, x, y, margin=0.0):
        """Inside test; ``margin > 0`` also demands that distance from the boundary."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        pts = np.column_stack([x.ravel(), y.ravel()])
        inside = self._path.contains_points(pts)
        if margin > 0:
            inside &= self.distance_to_boundary(pts[:, 0], pts[:, 1]) >= margin
        return inside.reshape(x.shape)

    def _project(self, x, y):
        """Distance to the boundary polygon and the curve parameter of the closest point."""
        x = np.atleast_1d(np.asarray(x, float)).ravel()
        y = np.atleast_1d(np.asarray(y, float)).ravel()
        a = self._poly
        b = np.roll(a, -1, axis=0)
        ex, ey = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
        dist = np.empty(x.size)
        tau = np.empty(x.size)
        for start in range(0, x.size, 256):
            px = x[start:start + 256, None]
            py = y[start:start + 256, None]
            u = np.clip(((px - a[:, 0]) * ex + (py - a[:, 1]) * ey) / (ex * ex + ey * ey), 0, 1)
            d = np.hypot(px - a[:, 0] - u * ex, py - a[:, 1] - u * ey)
            k = d.argmin(axis=1)
            rows = np.arange(k.size)
            dist[start:start + 256] = d[rows, k]
            tau[start:start + 256] = (k + u[rows, k]) / len(a)
        return dist, tau

    def distance_to_boundary(self, x, y):
        shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
        return self._project(x, y)[0].reshape(shape or (1,))

    def nearest_boundary_point(self, x, y):
        """Boundary point at the curve parameter of the closest polygon point."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        _, tau = self._project(x, y)
        bx, by = self.curve.point_tau(np.mod(tau, 1.0))
        return bx.reshape(x.shape), by.reshape(x.shape)

    def __repr__(self):
        return f"PlanarDomain({self.curve.label})"


class TubularChart:
    """Collar coordinates ``(t, s) -> γ(t) + s n(t)`` around the boundary."""

    def __init__(self, curve, s_max=None):
        self.curve = curve
        kmax = curve.max_abs_curvature()
        limit = 0.5 / kmax if kmax > 0 else 0.25 * curve.length
        self.s_max = float(min(s_max, limit) if s_max is not None else limit)
        for _ in range(8):
            if self._injective():
                break
            self.s_max *= 0.5

    def _injective(self):
        t = np.linspace(0.0, self.curve.length, 256, endpoint=False)
        s = np.array([-0.99, -0.5, 0.5, 0.99]) * self.s_max
        tt, ss = np.meshgrid(t, s)
        x, y = self.forward(tt, ss)
        poly = self.curve.polygon(2048)
        d = np.full(x.shape, np.inf)
        for p in np.array_split(poly, 8):
            dd = np.hypot(x[..., None] - p[:, 0], y[..., None] - p[:, 1]).min(axis=-1)
            d = np.minimum(d, dd)
        return bool(np.all(d >= np.abs(ss) * (1 - 1e-3) - 1e-3 * self.curve.length / 2048))

    def forward(self, t, s):
        der = self.curve.derivatives_t(t, 1)
        s = np.asarray(s, float)
        return der[0, 0] - s * der[1, 1], der[0, 1] + s * der[1, 0]

    def _check(self, s):
        if np.any(np.abs(np.asarray(s)) >= self.s_max):
            raise OutsideCollar(f"|s| must stay below {self.s_max:.6g}")

    def chart_jets(self, t, s, order):
        """Jets in ``(t, s)`` of the two Cartesian coordinates of the chart map."""
        self._check(s)
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        der = self.curve.derivatives_t(t, order + 1)
        X = {(i, 0): der[i, 0] - s * der[i + 1, 1] for i in range(order + 1)}
        Y = {(i, 0): der[i, 1] + s * der[i + 1, 0] for i in range(order + 1)}
        for i in range(order):
            X[(i, 1)] = -der[i + 1, 1]
            Y[(i, 1)] = der[i + 1, 0]
        return Jet2.from_partials(X, order), Jet2.from_partials(Y, order)

    def frame_jets(self, t, s, order):
        """Jets in ``(t, s)`` of ``a = e^{iα}`` and of the curvature ``k(t)``."""
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        der = self.curve.derivatives_t(t, order + 2)
        a = {(i, 0): der[i + 1, 0] + 1j * der[i + 1, 1] for i in range(order + 1)}
        tx = Jet2.from_partials({(i, 0): der[i + 1, 0] for i in range(order + 1)}, order)
        ty = Jet2.from_partials({(i, 0): der[i + 1, 1] for i in range(order + 1)}, order)
        nx = Jet2.from_partials({(i, 0): der[i + 2, 0] for i in range(order + 1)}, order)
        ny = Jet2.from_partials({(i, 0): der[i + 2, 1] for i in range(order + 1)}, order)
        return Jet2.from_partials(a, order), tx * ny - ty * nx


def pullback_jet(H, chart, t, s, order):
    """Jet in ``(t, s)`` of ``H(γ(t) + s n(t))`` by jet composition."""
    H = as_scalar_field(H)
    if order > H.max_order:
        raise OrderTooLow(f"pullback of order {order} needs H of that order")
    X, Y = chart.chart_jets(t, s, order)
    outer = H.jet(X.value, Y.value, order)
    return compose(outer, X, Y)


def _scale(values):
    return max(1.0, float(np.max(np.abs(values), initial=0.0)))


def _probe_t(chart, t, n=32):
    grid = np.linspace(0.0, chart.curve.length, n, endpoint=False)
    return np.concatenate([np.atleast_1d(np.asarray(t, float)).ravel(), grid])


def check_constant_on_boundary(H, chart, t=(), tol=1e-8):
    probes = _probe_t(chart, t)
    j = pullback_jet(H, chart, probes, 0.0, 2)
    res = max(np.max(np.abs(j[1, 0])), np.max(np.abs(j[2, 0])))
    if res > tol * _scale(j.value):
        raise NotConstantOnBoundary(f"H varies along the boundary (max |H_t|, |H_tt| = {res:.3e})")
    return float(res)


def boundary_formula_V(H, chart, t):
    """``(H_ss + k H_s - 2i H_st) e^{2iα}`` at ``s = 0`` as a real 2-vector."""
    check_constant_on_boundary(H, chart, t)
    j = pullback_jet(H, chart, t, 0.0, 2)
    k, alpha = chart.curve.curvature_and_angle(t)
    z = (j[0, 2] + k * j[0, 1] - 2j * j[1, 1]) * np.exp(2j * alpha)
    return np.stack([z.real, z.imag])


def boundary_formula_Vn(H, chart, t, n, tol=1e-8):
    """``i^n (∂_s^n H)(t, 0) e^{inα(t)}`` after checking the flatness hypothesis."""
    H = as_scalar_field(H)
    if n > H.max_order:
        raise OrderTooLow(f"boundary_formula_Vn needs H of order >= {n}")
    check_constant_on_boundary(H, chart, t, tol)
    probes = _probe_t(chart, t)
    pj = pullback_jet(H, chart, probes, 0.0, n)
    scale = _scale(pj.value)
    for order in range(1, n):
        res = float(np.max(np.abs(pj[0, order])))
        if res > tol * scale:
            raise BoundaryJetNotFlat(order, res)
    j = pullback_jet(H, chart, t, 0.0, n)
    _, alpha = chart.curve.curvature_and_angle(t)
    z = (1j ** n) * j[0, n] * np.exp(1j * n * alpha)
    return np.stack([z.real, z.imag])


def collar_operator(chart, t, s, order):
    """Return ``(apply_D, a, b)`` for ``D = ∂t / (1 - s k) + i ∂s`` at the probes.

    ``a = e^{iα}`` and ``b = i k / (1 - s k)`` are jets of order ``order``.
    """
    a, k = chart.frame_jets(t, s, order)
    s_jet = Jet2.variable(1, t, s, order)
    r = (1.0 - s_jet * k).reciprocal()
    b = k * r * 1j

    def apply_D(u):
        return u.dx() * r.truncate(u.order - 1) + u.dy() * 1j

    return apply_D, a, b


def verify_commutation(n, f, chart, probes):
    """Max over probes of ``|(aD)^n f - a^n ∏_{k=1..n} (D + (n-k) b) f|`` (relative)."""
    f = as_scalar_field(f)
    if f.max_order < n:
        raise OrderTooLow(f"commutation check of order {n} needs f of order >= {n}")
    probes = np.asarray(probes, float)
    t, s = probes[:, 0], probes[:, 1]
    chart._check(s)
    apply_D, a, b = collar_operator(chart, t, s, n)
    fj = f.jet(t, s, n)
    lhs = fj
    for _ in range(n):
        lhs = apply_D(lhs) * a.truncate(lhs.order - 1)
    rhs = fj
    for k in range(n, 0, -1):
        d = apply_D(rhs)
        rhs = d + rhs.truncate(d.order) * b.truncate(d.order) * (n - k)
    an = a.truncate(0).int_pow(n)
    diff = np.abs(lhs.value - an.value * rhs.value)
    scale = np.maximum(1.0, np.abs(lhs.value))
    return float(np.max(diff / scale))


def collar_loewner(H, chart, t, s, n):
    """``(a D)^n`` applied to the collar pullback of ``H``; equals ``(∂x + i∂y)^n H``."""
    t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
    apply_D, a, _ = collar_operator(chart, t, s, n)
    u = pullback_jet(H, chart, t, s, n)
    for _ in range(n):
        u = apply_D(u) * a.truncate(u.order - 1)
    return u.value
