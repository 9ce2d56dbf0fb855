"""Winding numbers, quadtree zero certificates and line-field indices.

A closed curve is any callable mapping parameters ``theta in [0, 1]`` to an
``(x, y)`` pair of arrays with ``curve(0) == curve(1)``.  Windings are
accumulated from principal-value angle increments on adaptively bisected
parameter intervals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (BudgetExceeded, DegreeMismatch, FieldVanishesOnCurve, NonIsolatedZeros,
                     UnguaranteedInput)

TWO_PI = 2.0 * np.pi
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


# curves ---------------------------------------------------------------------------------

def circle_curve(center=(0.0, 0.0), radius=1.0, phase=0.0):
    cx, cy = center

    def curve(theta):
        a = TWO_PI * (np.asarray(theta, float) + phase)
        return cx + radius * np.cos(a), cy + radius * np.sin(a)

    return curve


def box_curve(cx, cy, hx, hy=None):
    """Counterclockwise boundary of an axis-aligned box, starting at its lower-left corner."""
    hy = hx if hy is None else hy

    def curve(theta):
        q = 4.0 * np.mod(np.asarray(theta, float), 1.0)
        side = np.minimum(np.floor(q), 3).astype(int)
        u = q - side
        xs = np.choose(side, [-1 + 2 * u, np.ones_like(u), 1 - 2 * u, -np.ones_like(u)])
        ys = np.choose(side, [-np.ones_like(u), -1 + 2 * u, np.ones_like(u), 1 - 2 * u])
        return cx + hx * xs, cy + hy * ys

    return curve


def boundary_curve(curve):
    """Closed-curve callable for a :class:`~conformal_lab.domain.BoundaryCurve`."""
    def c(theta):
        x, y = curve.point_tau(np.mod(np.asarray(theta, float), 1.0))
        return x, y
    return c


def as_closed_curve(curve):
    if callable(curve) and not hasattr(curve, "point_tau"):
        return curve
    if hasattr(curve, "point_tau"):
        return boundary_curve(curve)
    if hasattr(curve, "curve"):
        return boundary_curve(curve.curve)
    raise TypeError(f"cannot use {curve!r} as a closed curve")


# winding engine ------------------------------------------------------------------------

@dataclass
class WindingResult:
    value: float
    samples: int
    min_norm: float
    guaranteed: bool
    total_angle: float = 0.0
    witness: tuple = None

    def __int__(self):
        return int(round(self.value))


class _Budget:
    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def charge(self, n):
        self.used += n
        if self.limit is not None and self.used > self.limit:
            raise BudgetExceeded(f"evaluation budget of {self.limit} points exhausted")


def _complex(vals):
    return vals[0] + 1j * vals[1]


def _batch_windings(field, curves, floor, n0=32, budget=None, min_width=1e-12):
    """Adaptive windings of ``field`` along several closed curves at once.

    Returns a list of tuples ``(total_angle, samples, min_norm, steps_ok, witness)``.
    Refinement bisects any interval whose principal angle step reaches π/2 or whose
    chord ``|z_{i+1} - z_i|`` exceeds ``min(|z_i|, |z_{i+1}|)``.
    Curves on which a sample falls below ``floor`` stop refining.
    """
    budget = budget or _Budget(None)
    thetas = [np.linspace(0.0, 1.0, n0 + 1) for _ in curves]
    pts = [c(th[:-1]) for c, th in zip(curves, thetas)]
    xs = np.concatenate([p[0] for p in pts])
    ys = np.concatenate([p[1] for p in pts])
    budget.charge(xs.size)
    allv = _complex(field(xs, ys))
    vals = []
    start = 0
    for th in thetas:
        m = th.size - 1
        v = allv[start:start + m]
        vals.append(np.concatenate([v, v[:1]]))
        start += m
    done = [False] * len(curves)
    stuck = [False] * len(curves)
    while True:
        new_theta = []
        for i, (th, v) in enumerate(zip(thetas, vals)):
            if done[i]:
                new_theta.append(None)
                continue
            if np.min(np.abs(v)) <= floor:
                done[i] = True
                new_theta.append(None)
                continue
            step = np.angle(v[1:] / v[:-1])
            chord = np.abs(np.diff(v))
            small = np.minimum(np.abs(v[1:]), np.abs(v[:-1]))
            bad = (np.abs(step) >= np.pi / 2) | (chord > small)
            width = np.diff(th)
            too_thin = bad & (width < min_width)
            if too_thin.any():
                stuck[i] = True
            bad &= ~too_thin
            if not bad.any():
                done[i] = True
                new_theta.append(None)
                continue
            new_theta.append(0.5 * (th[:-1][bad] + th[1:][bad]))
        active = [i for i, nt in enumerate(new_theta) if nt is not None]
        if not active:
            break
        pts = [curves[i](new_theta[i]) for i in active]
        xs = np.concatenate([p[0] for p in pts])
        ys = np.concatenate([p[1] for p in pts])
        budget.charge(xs.size)
        allv = _complex(field(xs, ys))
        start = 0
        for i in active:
            nt = new_theta[i]
            nv = allv[start:start + nt.size]
            start += nt.size
            th = np.concatenate([thetas[i], nt])
            v = np.concatenate([vals[i], nv])
            order = np.argsort(th, kind="stable")
            thetas[i], vals[i] = th[order], v[order]
    out = []
    for i, (c, th, v) in enumerate(zip(curves, thetas, vals)):
        mags = np.abs(v)
        k = int(np.argmin(mags))
        wx, wy = c(th[k:k + 1])
        witness = (float(wx[0]), float(wy[0]))
        if mags[k] <= floor:
            out.append((np.nan, th.size - 1, float(mags[k]), False, witness))
            continue
        step = np.angle(v[1:] / v[:-1])
        ok = bool(np.all(np.abs(step) < np.pi / 2)) and not stuck[i]
        out.append((float(step.sum()), th.size - 1, float(mags[k]), ok, witness))
    return out


def winding(V, curve, floor=1e-12, n0=64, half_integer=False, verify=True):
    """Winding number of ``V`` along a closed curve.

    Raises :class:`FieldVanishesOnCurve` when a sample drops to ``floor`` or below.
    With ``verify`` the converged sampling is doubled and the value rechecked.
    """
    curve = as_closed_curve(curve)
    total, n, mn, ok, witness = _batch_windings(V, [curve], floor, n0)[0]
    if np.isnan(total):
        raise FieldVanishesOnCurve(witness, mn)
    turns = total / TWO_PI
    value = round(2 * turns) / 2 if half_integer else round(turns)
    if verify and ok:
        th = np.linspace(0.0, 1.0, 2 * n + 1)
        v = _complex(V(*curve(th)))
        k = int(np.argmin(np.abs(v)))
        if abs(v[k]) <= floor:
            wx, wy = curve(th[k:k + 1])
            raise FieldVanishesOnCurve((float(wx[0]), float(wy[0])), float(abs(v[k])))
        # doubling the uniform grid is only a cross-check when it is fine enough
        steps = np.angle(v[1:] / v[:-1])
        if np.all(np.abs(steps) < np.pi / 2):
            again = steps.sum() / TWO_PI
            again = round(2 * again) / 2 if half_integer else round(again)
            ok = again == value
    return WindingResult(value, n, mn, ok and mn > floor, total, witness)


# line fields ----------------------------------------------------------------------------

class LineField:
    """Unoriented direction field given by its doubled vector ``W = (cos 2θ, sin 2θ) * r``."""

    def __init__(self, doubled, label=""):
        self._doubled = doubled
        self.label = label

    def __call__(self, x, y):
        return self._doubled(x, y)

    @classmethod
    def from_directions(cls, direction, label=""):
        """Line field spanned by ``direction(x, y) -> (dx, dy)``."""
        def doubled(x, y):
            dx, dy = direction(x, y)
            z = (np.asarray(dx) + 1j * np.asarray(dy)) ** 2
            return np.stack([z.real, z.imag])
        return cls(doubled, label)


def hessian_line_field(H):
    """Eigendirection field of the Hessian, ``W = (H_xx - H_yy, 2 H_xy)``."""
    from .fields import as_scalar_field

    H = as_scalar_field(H)

    def doubled(x, y):
        j = H.jet(x, y, 2)
        return np.stack([j[2, 0] - j[0, 2], 2 * j[1, 1]])

    return LineField(doubled, f"Hess[{H.label}]")


def line_field_index(L, curve, floor=1e-12):
    """Half-integer rotation number of a line field: winding of ``W`` divided by 2."""
    res = winding(L, curve, floor)
    return WindingResult(res.value / 2, res.samples, res.min_norm, res.guaranteed,
                         res.total_angle / 2, res.witness)


# zero certificates -------------------------------------------------------------------------

@dataclass
class ZeroCertificate:
    center: tuple
    half_width: float
    degree: int
    min_norm: float
    depth: int
    polished_center: tuple = None
    residual: float = None

    @property
    def box(self):
        cx, cy = self.center
        h = self.half_width
        return (cx - h, cy - h, cx + h, cy + h)

    @property
    def location(self):
        return self.polished_center if self.polished_center is not None else self.center

    def to_dict(self):
        return {
            "box": list(self.box),
            "center": list(self.center),
            "half_width": self.half_width,
            "degree": self.degree,
            "min_norm": self.min_norm,
            "depth": self.depth,
            "polished_center": None if self.polished_center is None else list(self.polished_center),
            "residual": self.residual,
        }


class CertificateSet(list):
    """List of :class:`ZeroCertificate` plus the search context."""

    def __init__(self, certs=(), boundary=None, scale=None, floor=None, resolution=None,
                 evaluations=0, warnings=None):
        super().__init__(certs)
        self.boundary = boundary
        self.scale = scale
        self.floor = floor
        self.resolution = resolution
        self.evaluations = evaluations
        self.warnings = warnings or []

    @property
    def degree_sum(self):
        return int(sum(c.degree for c in self))


def box_degree(V, center, half_width, floor=1e-12):
    return winding(V, box_curve(center[0], center[1], half_width), floor)


def _domain_samples(domain, n=256):
    """Deterministic low-discrepancy points inside the domain."""
    x0, y0, x1, y1 = domain.bbox
    k = np.arange(1, 8 * n + 1)
    u = np.mod(k * 0.7548776662466927, 1.0)
    v = np.mod(k * 0.5698402909980532, 1.0)
    x = x0 + (x1 - x0) * u
    y = y0 + (y1 - y0) * v
    inside = domain.contains(x, y)
    return x[inside][:n], y[inside][:n]


def field_scale(V, domain, n=256):
    x, y = _domain_samples(domain, n)
    return float(np.median(np.hypot(*V(x, y))))


def _boxes_touch_domain(domain, cx, cy, h, vertices):
    inside = domain.contains(cx, cy)
    for sx in (-1, 1):
        for sy in (-1, 1):
            inside |= domain.contains(cx + sx * h, cy + sy * h)
    vx, vy = vertices[:, 0], vertices[:, 1]
    has_vertex = ((np.abs(vx[None, :] - cx[:, None]) <= h[:, None])
                  & (np.abs(vy[None, :] - cy[:, None]) <= h[:, None])).any(axis=1)
    return inside | has_vertex, has_vertex


def _polish(V, certs, floor):
    if not certs:
        return
    z = np.array([c.center for c in certs], float).T
    h = np.array([c.half_width for c in certs])
    lo = z - 2 * h
    hi = z + 2 * h
    cur = z.copy()
    for _ in range(80):
        val = V(cur[0], cur[1])
        jac = V.jacobian(cur[0], cur[1])
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        safe = np.abs(det) > 1e-300
        d = np.where(safe, det, 1.0)
        dx = (jac[1, 1] * val[0] - jac[0, 1] * val[1]) / d
        dy = (-jac[1, 0] * val[0] + jac[0, 0] * val[1]) / d
        step = np.where(safe, np.stack([dx, dy]), 0.0)
        nxt = np.clip(cur - step, lo, hi)
        if np.all(np.abs(nxt - cur) <= 1e-15 * np.maximum(1.0, np.abs(cur))):
            cur = nxt
            break
        cur = nxt
    res = np.hypot(*V(cur[0], cur[1]))
    res0 = np.hypot(*V(z[0], z[1]))
    for i, c in enumerate(certs):
        if np.isfinite(res[i]) and res[i] <= res0[i]:
            c.polished_center = (float(cur[0, i]), float(cur[1, i]))
            c.residual = float(res[i])
        else:
            c.polished_center = c.center
            c.residual = float(res0[i])


def locate_zeros(V, domain, resolution=None, floor=None, budget=5_000_000,
                 zero_tol=1e-12, polish=True, boundary_depth=6):
    """Certify the zeros of ``V`` inside ``domain`` by quadtree degree computation.

    Returns a :class:`CertificateSet`; its ``boundary`` attribute holds the winding
    along the domain boundary, which always equals the sum of certificate degrees.
    """
    budget = _Budget(budget)
    scale = field_scale(V, domain)
    if not np.isfinite(scale) or scale <= zero_tol:
        raise NonIsolatedZeros(f"field vanishes on an open set (median |V| = {scale:.3e})")
    floor = 1e-10 * scale if floor is None else floor
    resolution = 1e-4 * domain.diameter if resolution is None else resolution
    boundary = winding(V, domain.curve, floor)
    if not boundary.guaranteed:
        raise UnguaranteedInput("boundary winding could not be guaranteed")

    x0, y0, x1, y1 = domain.bbox
    w = max(x1 - x0, y1 - y0)
    off = np.array([0.0137 * w, 0.0291 * w * _GOLDEN])
    root_c = np.array([(x0 + x1) / 2, (y0 + y1) / 2]) + off
    root_h = 0.5 * w * 1.07 + np.abs(off).max()
    boundary_h = root_h / 2 ** boundary_depth
    vertices = domain.curve.polygon(1024)

    cx, cy = np.array([root_c[0]]), np.array([root_c[1]])
    hs = np.array([root_h])
    parent = np.array([-1])
    parents = []          # (center, half_width, degree, min_norm, depth) of split boxes
    depth = 0
    certs = []
    warnings = []
    extra_levels = 0
    coarse = 0
    while cx.size:
        touch, straddle = _boxes_touch_domain(domain, cx, cy, hs, vertices)
        cx, cy, hs, parent, straddle = cx[touch], cy[touch], hs[touch], parent[touch], straddle[touch]
        if not cx.size:
            break
        curves = [box_curve(a, b, h) for a, b, h in zip(cx, cy, hs)]
        results = _batch_windings(V, curves, floor, n0=32, budget=budget)
        # a box of nonzero degree whose children reach the floor is certified as it stands
        frozen = {int(parent[i]) for i, r in enumerate(results)
                  if np.isnan(r[0]) and parent[i] >= 0 and parents[parent[i]][2] != 0}
        for p in sorted(frozen):
            center, h, deg, mn, d = parents[p]
            certs.append(ZeroCertificate(center, h, deg, mn, d))
            coarse += 1
        split = np.zeros(cx.size, bool)
        for i, (total, n, mn, ok, witness) in enumerate(results):
            if int(parent[i]) in frozen:
                continue
            final = hs[i] <= resolution
            if np.isnan(total):
                if final and extra_levels >= 4:
                    raise NonIsolatedZeros(
                        f"|V| <= floor on every refinement of the box at ({cx[i]:.6g}, {cy[i]:.6g})")
                split[i] = True
                results[i] = (total, n, mn, ok, witness)
                continue
            deg = int(round(total / TWO_PI))
            results[i] = (deg, n, mn, ok, witness)
            if deg != 0:
                if final:
                    certs.append(ZeroCertificate((float(cx[i]), float(cy[i])), float(hs[i]), deg,
                                                 mn, depth))
                else:
                    split[i] = True
            elif straddle[i] and hs[i] > boundary_h:
                split[i] = True
            elif mn < floor:
                split[i] = not final
        if split.any() and hs[split].max() <= resolution:
            extra_levels += 1
        idx = np.flatnonzero(split)
        ids = np.arange(len(parents), len(parents) + idx.size)
        for i in idx:
            deg = results[i][0]
            parents.append(((float(cx[i]), float(cy[i])), float(hs[i]),
                            0 if np.isnan(deg) else int(deg), results[i][2], depth))
        q = hs[idx] / 2
        cx = np.concatenate([cx[idx] - q, cx[idx] + q, cx[idx] - q, cx[idx] + q])
        cy = np.concatenate([cy[idx] - q, cy[idx] - q, cy[idx] + q, cy[idx] + q])
        hs = np.concatenate([q, q, q, q])
        parent = np.concatenate([ids, ids, ids, ids])
        depth += 1

    if coarse:
        warnings.append(f"{coarse} certificate(s) kept above the target resolution because "
                        "|V| drops below the floor on finer boxes (high-order zero)")
    inside = [c for c in certs if domain.contains(*c.center)]
    dropped = len(certs) - len(inside)
    if dropped:
        warnings.append(f"{dropped} certificate(s) outside the domain discarded")
    warnings.append(f"zero pairs of opposite degree closer than {resolution:.3g} are not resolved")
    result = CertificateSet(inside, boundary, scale, floor, resolution, budget.used, warnings)
    if result.degree_sum != int(boundary.value):
        raise DegreeMismatch(f"certificate degrees sum to {result.degree_sum}, "
                             f"boundary winding is {boundary.value}")
    if polish:
        _polish(V, result, floor)
    return result


def poincare_hopf_check(certs, boundary):
    """True iff the certificate degrees add up to the boundary winding."""
    if boundary is None or not boundary.guaranteed:
        raise UnguaranteedInput("boundary winding is not guaranteed")
    return sum(c.degree for c in certs) == boundary.value
