"""Truncated bivariate Taylor jets storing raw partial derivatives.

A :class:`Jet2` of order ``N`` holds ``d[i, j] = ∂x^i ∂y^j f`` at a base point for
all ``i + j <= N``.  Entries are flattened by total degree, then by the power of
``y``: ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...``, so the jet of order
``m < N`` is a prefix of the jet of order ``N``.

Coefficient arrays may carry trailing batch dimensions; all arithmetic is
vectorized over them, which is how fields are evaluated at many points at once.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from .errors import DomainError

DEFAULT_MAX_ORDER = 8


def n_terms(order):
    return (order + 1) * (order + 2) // 2


def flat_index(i, j):
    d = i + j
    return d * (d + 1) // 2 + j


@lru_cache(maxsize=None)
def _tables(order):
    pairs = [(d - j, j) for d in range(order + 1) for j in range(d + 1)]
    weights = np.array([1.0 / (factorial(i) * factorial(j)) for i, j in pairs])
    k1, k2, kout = [], [], []
    for a, (i1, j1) in enumerate(pairs):
        for b, (i2, j2) in enumerate(pairs):
            if i1 + i2 + j1 + j2 <= order:
                k1.append(a)
                k2.append(b)
                kout.append(flat_index(i1 + i2, j1 + j2))
    scatter = np.zeros((len(pairs), len(kout)))
    scatter[kout, np.arange(len(kout))] = 1.0
    if order > 0:
        lower = [(d - j, j) for d in range(order) for j in range(d + 1)]
        shift_x = np.array([flat_index(i + 1, j) for i, j in lower])
        shift_y = np.array([flat_index(i, j + 1) for i, j in lower])
    else:
        shift_x = shift_y = np.zeros(0, dtype=int)
    return pairs, weights, np.array(k1), np.array(k2), scatter, shift_x, shift_y


def _bcast(w, ndim):
    return w.reshape(w.shape + (1,) * (ndim - 1))


class Jet2:
    """Raw-partial jet of a scalar function of two variables."""

    __slots__ = ("order", "coeffs", "base")

    def __init__(self, coeffs, order, base=None):
        coeffs = np.asarray(coeffs)
        if coeffs.dtype.kind not in "fc":
            coeffs = coeffs.astype(float)
        if coeffs.shape[0] != n_terms(order):
            raise ValueError(f"order {order} needs {n_terms(order)} coefficients, "
                             f"got {coeffs.shape[0]}")
        self.order = order
        self.coeffs = coeffs
        self.base = base

    # construction -----------------------------------------------------------------
    @classmethod
    def constant(cls, value, order, batch_shape=(), base=None, dtype=float):
        c = np.zeros((n_terms(order),) + tuple(batch_shape), dtype=dtype)
        c[0] = value
        return cls(c, order, base)

    @classmethod
    def variable(cls, which, x0, y0, order):
        """Jet of the coordinate function ``x`` (which=0) or ``y`` (which=1)."""
        x0, y0 = np.broadcast_arrays(np.asarray(x0, float), np.asarray(y0, float))
        c = np.zeros((n_terms(order),) + x0.shape)
        c[0] = x0 if which == 0 else y0
        if order >= 1:
            c[1 + which] = 1.0
        return cls(c, order, (x0, y0))

    @classmethod
    def from_partials(cls, partials, order, base=None):
        """Build from a mapping ``{(i, j): value}``; missing entries are zero."""
        first = next(iter(partials.values()))
        shape = np.shape(first)
        c = np.zeros((n_terms(order),) + shape, dtype=np.result_type(*partials.values(), float))
        for (i, j), v in partials.items():
            if i + j <= order:
                c[flat_index(i, j)] = v
        return cls(c, order, base)

    def _like(self, coeffs, order=None):
        return Jet2(coeffs, self.order if order is None else order, self.base)

    def constant_like(self, value):
        c = np.zeros_like(self.coeffs, dtype=np.result_type(self.coeffs, value))
        c[0] = value
        return self._like(c)

    # access -------------------------------------------------------------------------
    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    @property
    def value(self):
        return self.coeffs[0]

    def __getitem__(self, ij):
        i, j = ij
        if i + j > self.order:
            raise IndexError(f"partial ({i}, {j}) exceeds jet order {self.order}")
        return self.coeffs[flat_index(i, j)]

    def partials(self):
        pairs = _tables(self.order)[0]
        return {ij: self.coeffs[k] for k, ij in enumerate(pairs)}

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        return self._like(self.coeffs[: n_terms(order)], order)

    def real(self):
        return self._like(self.coeffs.real.copy())

    def imag(self):
        return self._like(self.coeffs.imag.copy())

    def dx(self):
        """Partial derivative in the first variable; the order drops by one."""
        return self._like(self.coeffs[_tables(self.order)[5]], self.order - 1)

    def dy(self):
        return self._like(self.coeffs[_tables(self.order)[6]], self.order - 1)

    def taylor(self):
        """Taylor coefficients ``d[i, j] / (i! j!)``."""
        w = _tables(self.order)[1]
        return self.coeffs * _bcast(w, self.coeffs.ndim)

    # arithmetic ---------------------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet2):
            if other.order != self.order:
                m = min(self.order, other.order)
                return self.truncate(m), other.truncate(m)
            return self, other
        return self, self.constant_like(other)

    def __neg__(self):
        return self._like(-self.coeffs)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Jet2):
            c = self.coeffs.astype(np.result_type(self.coeffs, other), copy=True)
            c[0] = c[0] + other
            return self._like(c)
        a, b = self._coerce(other)
        return a._like(a.coeffs + b.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            return self._like(self.coeffs * other)
        a, b = self._coerce(other)
        _, w, k1, k2, scatter, _, _ = _tables(a.order)
        wb = _bcast(w, a.coeffs.ndim)
        ta = a.coeffs * wb
        tb = b.coeffs * wb
        prod = ta[k1] * tb[k2]
        flat = prod.reshape(prod.shape[0], -1)
        out = (scatter @ flat).reshape((scatter.shape[0],) + prod.shape[1:])
        return a._like(out / wb)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            return self._like(self.coeffs / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet2):
            return (self.log() * p).exp()
        if float(p).is_integer():
            return self.int_pow(int(p))
        return (self.log() * float(p)).exp()

    def int_pow(self, n):
        if n < 0:
            return self.int_pow(-n).reciprocal()
        result = self.constant_like(1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # univariate composition ---------------------------------------------------------
    def compose_univariate(self, derivs):
        """Return ``f(self)`` given ``derivs[k] = f^(k)(value)`` for ``k = 0..order``."""
        n = self.order
        delta = self.coeffs.copy()
        delta[0] = 0
        delta = self._like(delta)
        result = self.constant_like(derivs[n] / factorial(n))
        for k in range(n - 1, -1, -1):
            result = result * delta + derivs[k] / factorial(k)
        return result

    def exp(self):
        e = np.exp(self.value)
        return self.compose_univariate([e] * (self.order + 1))

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [s, c, -s, -c]
        return self.compose_univariate([cycle[k % 4] for k in range(self.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [c, -s, -c, s]
        return self.compose_univariate([cycle[k % 4] for k in range(self.order + 1)])

    def log(self):
        u = self.value
        if np.iscomplexobj(u) or np.any(u <= 0):
            raise DomainError(f"log argument must be positive (min {np.min(np.real(u)):.3e})")
        derivs = [np.log(u)]
        for k in range(1, self.order + 1):
            derivs.append((-1) ** (k - 1) * factorial(k - 1) / u ** k)
        return self.compose_univariate(derivs)

    def sqrt(self):
        u = self.value
        if np.iscomplexobj(u) or np.any(u < 0) or (self.order > 0 and np.any(u == 0)):
            raise DomainError(f"sqrt argument must be non-negative (min {np.min(np.real(u)):.3e})")
        derivs = []
        coef = 1.0
        for k in range(self.order + 1):
            derivs.append(coef * u ** (0.5 - k))
            coef *= 0.5 - k
        return self.compose_univariate(derivs)

    def reciprocal(self):
        u = self.value
        if np.any(np.abs(u) < 1e-300):
            raise DomainError("divisor vanishes")
        derivs = [(-1) ** k * factorial(k) / u ** (k + 1) for k in range(self.order + 1)]
        return self.compose_univariate(derivs)

    def __repr__(self):
        return f"Jet2(order={self.order}, batch_shape={self.batch_shape})"


def compose(outer, inner_x, inner_y):
    """Substitute jets ``inner_x``, ``inner_y`` into ``outer``.

    ``outer`` is the jet of ``h`` at ``(inner_x.value, inner_y.value)``; the
    result is the jet of ``h(inner_x, inner_y)`` in the inner variables.
    """
    order = min(outer.order, inner_x.order, inner_y.order)
    ix, iy = inner_x.truncate(order), inner_y.truncate(order)
    dxc = ix.coeffs.copy()
    dxc[0] = 0
    dyc = iy.coeffs.copy()
    dyc[0] = 0
    dxj, dyj = ix._like(dxc), iy._like(dyc)
    px = [ix.constant_like(1.0)]
    py = [iy.constant_like(1.0)]
    for _ in range(order):
        px.append(px[-1] * dxj)
        py.append(py[-1] * dyj)
    tc = outer.truncate(order).taylor()
    result = None
    for k, (i, j) in enumerate(_tables(order)[0]):
        term = px[i] * py[j] * tc[k]
        result = term if result is None else result + term
    return result
