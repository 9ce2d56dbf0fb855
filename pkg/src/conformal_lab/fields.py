"""Scalar fields, planar maps and the derived vector fields.

All evaluators are vectorized: ``x`` and ``y`` may be arrays of any (equal or
broadcastable) shape and vector values come back with shape ``(2,) + shape``.
"""
from __future__ import annotations

from math import comb

import numpy as np

from .errors import NonpositiveConformalFactor, OrderTooLow
from .expr import Expression, eval_jet, parse
from .jets import DEFAULT_MAX_ORDER, Jet2


class ScalarField:
    """A function ``H(x, y)`` queried for jets."""

    def __init__(self, evaluator, max_order=DEFAULT_MAX_ORDER, label=""):
        self._evaluator = evaluator
        self.max_order = max_order
        self.label = label

    @classmethod
    def from_expression(cls, expression, var_names=("x", "y"), max_order=DEFAULT_MAX_ORDER):
        if not isinstance(expression, Expression):
            expression = parse(expression, var_names)
        field = cls(lambda x, y, order: eval_jet(expression, x, y, order, max_order),
                    max_order, label=str(expression))
        field.expression = expression
        return field

    @classmethod
    def constant(cls, value):
        return cls(lambda x, y, order: Jet2.constant(value, order, np.broadcast(x, y).shape),
                   DEFAULT_MAX_ORDER, label=repr(value))

    def jet(self, x, y, order):
        if order > self.max_order:
            raise OrderTooLow(f"{self.label or 'field'} supports order {self.max_order}, "
                              f"{order} requested")
        return self._evaluator(x, y, order)

    def __call__(self, x, y):
        return self.jet(x, y, 0).value

    def __repr__(self):
        return f"ScalarField({self.label!r}, max_order={self.max_order})"


def as_scalar_field(h):
    if isinstance(h, ScalarField):
        return h
    if isinstance(h, (str, Expression)):
        return ScalarField.from_expression(h)
    if np.isscalar(h):
        return ScalarField.constant(float(h))
    raise TypeError(f"cannot interpret {h!r} as a scalar field")


class VectorField:
    """A planar vector field with an optional analytic Jacobian.

    ``evaluator(x, y, with_jacobian)`` returns ``(values, jacobian_or_None)``.
    When the analytic Jacobian is unavailable, :meth:`jacobian` falls back to
    central differences and ``jacobian_is_fd`` is set.
    """

    def __init__(self, evaluator, label="", has_jacobian=True):
        self._evaluator = evaluator
        self.label = label
        self.has_jacobian = has_jacobian

    @classmethod
    def from_function(cls, func, label="", jacobian=None):
        """Wrap ``func(x, y) -> (vx, vy)`` and an optional ``jacobian(x, y)``."""
        def evaluator(x, y, with_jacobian):
            val = np.asarray(func(x, y), dtype=float)
            jac = np.asarray(jacobian(x, y), dtype=float) if (with_jacobian and jacobian) else None
            return val, jac
        return cls(evaluator, label, has_jacobian=jacobian is not None)

    @property
    def jacobian_is_fd(self):
        return not self.has_jacobian

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self._evaluator(x, y, False)[0]

    def jacobian(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if self.has_jacobian:
            return self._evaluator(x, y, True)[1]
        h = 1e-6 * np.maximum(1.0, np.hypot(x, y))
        xs = np.stack([x + h, x - h, x, x])
        ys = np.stack([y, y, y + h, y - h])
        v = self(xs, ys)
        jx = (v[:, 0] - v[:, 1]) / (2 * h)
        jy = (v[:, 2] - v[:, 3]) / (2 * h)
        return np.stack([jx, jy], axis=1)

    def __neg__(self):
        def evaluator(x, y, with_jacobian):
            v, j = self._evaluator(x, y, with_jacobian)
            return -v, (None if j is None else -j)
        return VectorField(evaluator, f"-({self.label})", self.has_jacobian)

    def __repr__(self):
        return f"VectorField({self.label!r})"


def _jet_field(sources, base_order, build, label):
    """Vector field whose components are jets built from the source jets.

    ``build`` receives one jet per source and returns two component jets whose
    order is ``source order - base_order``; with one spare order the component
    jets carry the Jacobian for free.
    """
    top = min(s.max_order for s in sources)
    if top < base_order:
        raise OrderTooLow(f"{label} needs jets of order {base_order}, sources provide {top}")
    has_jac = top >= base_order + 1

    def evaluator(x, y, with_jacobian):
        order = base_order + 1 if (with_jacobian and has_jac) else base_order
        c1, c2 = build(*[s.jet(x, y, order) for s in sources])
        val = np.stack([np.real(c1.value), np.real(c2.value)])
        if not (with_jacobian and has_jac):
            return val, None
        jac = np.array([[c1[1, 0], c1[0, 1]], [c2[1, 0], c2[0, 1]]], dtype=float)
        return val, jac

    return VectorField(evaluator, label, has_jacobian=has_jac)


def _require(field, order, what):
    if field.max_order < order:
        raise OrderTooLow(f"{what} needs {field.label or 'the field'} of order >= {order}")


def hamiltonian_field(H):
    """``X_H = (H_y, -H_x)``."""
    H = as_scalar_field(H)
    _require(H, 2, "hamiltonian_field")
    return _jet_field([H], 1, lambda h: (h.dy(), -h.dx()), f"X[{H.label}]")


def gradient_field(H):
    H = as_scalar_field(H)
    _require(H, 1, "gradient_field")
    return _jet_field([H], 1, lambda h: (h.dx(), h.dy()), f"grad[{H.label}]")


def conformal_defect(H):
    """``V = (H_yy - H_xx, -2 H_xy)``; zeros are the conformal points of ``X_H``."""
    H = as_scalar_field(H)
    _require(H, 2, "conformal_defect")

    def build(h):
        hx, hy = h.dx(), h.dy()
        return hy.dy() - hx.dx(), hx.dy() * -2.0

    return _jet_field([H], 2, build, f"V[{H.label}]")


def loewner_field(H, n):
    """Real and imaginary parts of ``(∂x + i∂y)^n H``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    H = as_scalar_field(H)
    _require(H, n, f"loewner_field(n={n})")

    def build(h):
        total = None
        for k in range(n + 1):
            d = h
            for _ in range(n - k):
                d = d.dx()
            for _ in range(k):
                d = d.dy()
            term = d * (comb(n, k) * 1j ** k)
            total = term if total is None else total + term
        return total.real(), total.imag()

    return _jet_field([H], n, build, f"V{n}[{H.label}]")


def riemannian_defect(H, gfac):
    """Defect of ``X_H`` for the metric ``(dx^2 + dy^2) / gfac``.

    Value ``((g H_y)_y - (g H_x)_x, -(g H_x)_y - (g H_y)_x)``.
    """
    H = as_scalar_field(H)
    gfac = as_scalar_field(gfac)
    _require(H, 2, "riemannian_defect")
    _require(gfac, 1, "riemannian_defect")

    def build(h, g):
        if np.any(g.value <= 0):
            raise NonpositiveConformalFactor(
                f"conformal factor {g.value.min() if np.ndim(g.value) else g.value} <= 0")
        g = g.truncate(h.order - 1)
        p = g * h.dx()
        q = g * h.dy()
        return q.dy() - p.dx(), -(p.dy() + q.dx())

    return _jet_field([H, gfac], 2, build, f"V[{H.label}; g={gfac.label}]")


class PlanarMap:
    """A map ``F = (f, g)``; ``evaluator(x, y, order)`` returns the two component jets."""

    def __init__(self, evaluator, max_order, label="", symplectic_claimed=False,
                 symplectic_tol=1e-8, fd_jets=False):
        self._evaluator = evaluator
        self.max_order = max_order
        self.label = label
        self.symplectic_claimed = symplectic_claimed
        self.symplectic_tol = symplectic_tol
        self.fd_jets = fd_jets
        self.max_symplectic_residual = 0.0

    @classmethod
    def from_components(cls, f, g, label="", symplectic_claimed=False, symplectic_tol=1e-8):
        f, g = as_scalar_field(f), as_scalar_field(g)
        return cls(lambda x, y, order: (f.jet(x, y, order), g.jet(x, y, order)),
                   min(f.max_order, g.max_order), label or f"({f.label}, {g.label})",
                   symplectic_claimed, symplectic_tol)

    @classmethod
    def identity(cls):
        return cls.from_components("x", "y", label="identity", symplectic_claimed=True)

    @classmethod
    def rotation(cls, theta, center=(0.0, 0.0)):
        c, s = float(np.cos(theta)), float(np.sin(theta))
        cx, cy = float(center[0]), float(center[1])
        f = f"{cx!r} + {c!r}*(x - {cx!r}) - {s!r}*(y - {cy!r})"
        g = f"{cy!r} + {s!r}*(x - {cx!r}) + {c!r}*(y - {cy!r})"
        return cls.from_components(f, g, label=f"rotation({theta!r})", symplectic_claimed=True)

    def jets(self, x, y, order):
        if order > self.max_order:
            raise OrderTooLow(f"map {self.label} supports order {self.max_order}, {order} requested")
        return self._evaluator(x, y, order)

    def __call__(self, x, y):
        fj, gj = self.jets(x, y, 0)
        return np.stack([fj.value, gj.value])

    def value_and_jacobian(self, x, y):
        fj, gj = self.jets(x, y, 1)
        val = np.stack([fj.value, gj.value])
        jac = np.array([[fj[1, 0], fj[0, 1]], [gj[1, 0], gj[0, 1]]])
        if self.symplectic_claimed:
            res = np.max(np.abs(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0] - 1.0), initial=0.0)
            self.max_symplectic_residual = max(self.max_symplectic_residual, float(res))
        return val, jac

    def jacobian(self, x, y):
        return self.value_and_jacobian(x, y)[1]

    def symplectic_residual(self, x, y):
        jac = self.jacobian(x, y)
        return np.abs(jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0] - 1.0)

    def __repr__(self):
        return f"PlanarMap({self.label!r})"


def map_conformal_defect(F):
    """``(f_x - g_y, f_y + g_x)`` in source coordinates."""
    if F.max_order < 1:
        raise OrderTooLow("map_conformal_defect needs first-order jets of the map")
    has_jac = F.max_order >= 2

    def evaluator(x, y, with_jacobian):
        order = 2 if (with_jacobian and has_jac) else 1
        fj, gj = F.jets(x, y, order)
        c1 = fj.dx() - gj.dy()
        c2 = fj.dy() + gj.dx()
        val = np.stack([c1.value, c2.value])
        if order == 1:
            return val, None
        return val, np.array([[c1[1, 0], c1[0, 1]], [c2[1, 0], c2[0, 1]]])

    return VectorField(evaluator, f"mapdefect[{F.label}]", has_jacobian=has_jac)
