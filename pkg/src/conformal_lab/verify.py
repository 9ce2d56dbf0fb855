"""Numerical checks of the algebraic identities the pipeline relies on.

Each suite returns a dict of maximum residuals plus the tolerance it is held to.
"""
from __future__ import annotations

import numpy as np

from .domain import BoundaryCurve, TubularChart, verify_commutation
from .fields import ScalarField
from .symplecto import (graph_pullback_residual, map_from_generating_function,
                        derivative_relations_check, transversality_matrix,
                        transversality_residuals)

SUITES = ("commutation", "graph", "determinant", "relations")

COLLAR_TEST_FUNCTION = "sin(2*x + 0.3) * exp(y) + x^2 * y - cos(y)"


def random_symplectic_jacobians(n, rng):
    """Products ``shear · rotation · shear`` with determinant one."""
    out = np.empty((n, 2, 2))
    for i in range(n):
        a, b = rng.uniform(-2, 2, 2)
        th = rng.uniform(0, 2 * np.pi)
        s1 = np.array([[1.0, a], [0.0, 1.0]])
        s2 = np.array([[1.0, 0.0], [b, 1.0]])
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        out[i] = s1 @ rot @ s2
    return out


def commutation_suite(rng, n_probes=100, orders=(2, 3)):
    f = ScalarField.from_expression(COLLAR_TEST_FUNCTION)
    results = {}
    for name, curve in (("circle", BoundaryCurve.circle((0.0, 0.0), 1.0)),
                        ("ellipse", BoundaryCurve.ellipse(1.0, 0.6))):
        chart = TubularChart(curve)
        t = rng.uniform(0.0, curve.length, n_probes)
        s = rng.uniform(-0.9, 0.9, n_probes) * chart.s_max
        for n in orders:
            results[f"{name}_n{n}"] = verify_commutation(n, f, chart, np.column_stack([t, s]))
    return {"residuals": results, "max": max(results.values()), "tolerance": 1e-6}


def graph_suite(rng):
    return {"residuals": {"pullback": graph_pullback_residual()},
            "max": graph_pullback_residual(), "tolerance": 1e-15}


def determinant_suite(rng, n=100):
    jac = random_symplectic_jacobians(n, rng)
    res = float(transversality_residuals(jac).max())
    shear = float(np.linalg.det(transversality_matrix([[-1.0, 1.0], [0.0, -1.0]])))
    return {"residuals": {"random": res, "shear_determinant": abs(shear)},
            "max": max(res, abs(shear)), "tolerance": 1e-10}


def relations_suite(rng, eps=0.01, n=100):
    H = ScalarField.from_expression(f"{eps!r} * (1 - x^2 - y^2)^2")
    F = map_from_generating_function(H)
    r = np.sqrt(rng.uniform(0, 1, n))
    th = rng.uniform(0, 2 * np.pi, n)
    probes = np.column_stack([r * np.cos(th), r * np.sin(th)])
    res = derivative_relations_check(H, F, probes)
    return {"residuals": {"generated": res}, "max": res, "tolerance": 1e-6}


def run_suites(which="all", seed=0):
    names = SUITES if which == "all" else (which,)
    rng = np.random.default_rng(seed)
    table = {"commutation": commutation_suite, "graph": graph_suite,
             "determinant": determinant_suite, "relations": relations_suite}
    out = {}
    for name in names:
        res = table[name](rng)
        res["passed"] = bool(res["max"] <= res["tolerance"])
        out[name] = res
    return out
