"""Time-ε Hamiltonian flows with their variational equations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import OrderTooLow, StepFailure
from .fields import PlanarMap, as_scalar_field, conformal_defect, map_conformal_defect
from .jets import Jet2


@dataclass
class FlowResult:
    image: np.ndarray      # (2, N)
    jacobian: np.ndarray   # (2, 2, N)

    @property
    def det_residual(self):
        j = self.jacobian
        return np.abs(j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0] - 1.0)


def _rhs(H):
    def rhs(_t, state):
        n = state.size // 6
        s = state.reshape(6, n)
        j = H.jet(s[0], s[1], 2)
        hxx, hxy, hyy = j[2, 0], j[1, 1], j[0, 2]
        # d/dt (x, y) = (H_y, -H_x); dX_H = [[H_xy, H_yy], [-H_xx, -H_xy]]
        z11, z12, z21, z22 = s[2], s[3], s[4], s[5]
        out = np.empty_like(s)
        out[0] = j[0, 1]
        out[1] = -j[1, 0]
        out[2] = hxy * z11 + hyy * z21
        out[3] = hxy * z12 + hyy * z22
        out[4] = -hxx * z11 - hxy * z21
        out[5] = -hxx * z12 - hxy * z22
        return out.ravel()
    return rhs


def integrate(H, eps, p, tol=1e-10):
    """Flow ``p`` for time ``eps`` under ``X_H = (H_y, -H_x)``.

    ``p`` is a pair of arrays (or a single point); all trajectories are advanced
    as one stacked system.  Returns a :class:`FlowResult` with flattened batch.
    """
    H = as_scalar_field(H)
    if H.max_order < 3:
        raise OrderTooLow("flow integration needs the Hamiltonian to order >= 3")
    x = np.atleast_1d(np.asarray(p[0], float)).ravel()
    y = np.atleast_1d(np.asarray(p[1], float)).ravel()
    x, y = np.broadcast_arrays(x, y)
    n = x.size
    eye = np.zeros((2, 2, n))
    eye[0, 0] = eye[1, 1] = 1.0
    if eps == 0 or n == 0:
        return FlowResult(np.stack([x, y]).astype(float), eye)
    state0 = np.concatenate([x, y, np.ones(n), np.zeros(n), np.zeros(n), np.ones(n)])
    sol = solve_ivp(_rhs(H), (0.0, float(eps)), state0, method="DOP853",
                    rtol=tol, atol=tol, t_eval=None, dense_output=False)
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise StepFailure(f"integrator failed at eps={eps}: {sol.message}")
    s = sol.y[:, -1].reshape(6, n)
    jac = np.stack([np.stack([s[2], s[3]]), np.stack([s[4], s[5]])])
    return FlowResult(s[:2].copy(), jac)


def flow_as_map(H, eps, tol=1e-10, fd_step=None):
    """Time-``eps`` flow wrapped as a :class:`PlanarMap` with jets up to order 2.

    First-order jets come from the variational equations; second-order entries
    are central differences of the variational Jacobian (``fd_jets`` is set).
    """
    H = as_scalar_field(H)
    h = max(1e-5, np.sqrt(tol)) if fd_step is None else fd_step

    def evaluator(x, y, order):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        shape = x.shape
        xf, yf = x.ravel(), y.ravel()
        n = xf.size
        if order >= 2:
            xs = np.concatenate([xf, xf + h, xf - h, xf, xf])
            ys = np.concatenate([yf, yf, yf, yf + h, yf - h])
        else:
            xs, ys = xf, yf
        res = integrate(H, eps, (xs, ys), tol)
        img, jac = res.image[:, :n], res.jacobian[:, :, :n]
        jets = []
        for c in range(2):
            parts = {(0, 0): img[c]}
            if order >= 1:
                parts[(1, 0)] = jac[c, 0]
                parts[(0, 1)] = jac[c, 1]
            if order >= 2:
                jx = (res.jacobian[c, :, n:2 * n] - res.jacobian[c, :, 2 * n:3 * n]) / (2 * h)
                jy = (res.jacobian[c, :, 3 * n:4 * n] - res.jacobian[c, :, 4 * n:]) / (2 * h)
                parts[(2, 0)] = jx[0]
                parts[(1, 1)] = 0.5 * (jx[1] + jy[0])
                parts[(0, 2)] = jy[1]
            parts = {k: v.reshape(shape) for k, v in parts.items()}
            jets.append(Jet2.from_partials(parts, order))
        return jets[0], jets[1]

    return PlanarMap(evaluator, 2, label=f"flow[{H.label}; eps={eps!r}]",
                     symplectic_claimed=True, symplectic_tol=10 * tol, fd_jets=True)


def field_vs_flow_experiment(H, eps_list, domain, resolution=None, tol=1e-10):
    """Conformal-point counts of the field ``V`` next to those of the flows ``F_eps``.

    The flow side searches zeros of the raw map defect in ``(x, y)`` coordinates, so
    it does not require the flow to fix the boundary.  Exploratory only.
    """
    from .index import _domain_samples, locate_zeros

    H = as_scalar_field(H)
    field_certs = locate_zeros(conformal_defect(H), domain, resolution)
    rows = []
    for eps in eps_list:
        F = flow_as_map(H, eps, tol)
        certs = locate_zeros(map_conformal_defect(F), domain, resolution)
        rows.append({
            "eps": float(eps),
            "field_count": len(field_certs),
            "field_degree_sum": field_certs.degree_sum,
            "flow_count": len(certs),
            "flow_degree_sum": certs.degree_sum,
            "flow_boundary_winding": int(certs.boundary.value),
            "flow_locations": [list(c.location) for c in certs],
            "symplectic_residual": float(F.symplectic_residual(*_domain_samples(domain, 64)).max()),
        })
    return rows
