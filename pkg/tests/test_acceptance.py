"""Acceptance criteria; each records one PASS/FAIL line shown in the terminal summary."""
import time

import numpy as np
import pytest

from conformal_lab.domain import (BoundaryCurve, PlanarDomain, TubularChart, boundary_formula_V,
                                  pullback_jet)
from conformal_lab.errors import FieldVanishesOnCurve, NonIsolatedZeros
from conformal_lab.fields import PlanarMap, conformal_defect, loewner_field, riemannian_defect
from conformal_lab.flow import field_vs_flow_experiment, flow_as_map
from conformal_lab.index import locate_zeros, winding
from conformal_lab.sphere import (SupportFunction, find_umbilics, first_harmonic_defect,
                                  principal_gap_oracle)
from conformal_lab.symplecto import (conformal_points_of_map, derivative_relations_check,
                                     recover_generating_function)
from conformal_lab.verify import run_suites

from conftest import ACCEPTANCE
from oracles import complex_factor_field, sign_grid_zeros

DISC = PlanarDomain.disc()
GFAC = "(1 + x^2 + y^2)^2/4"
MONOMIALS = ["x", "y", "x^2", "x*y", "y^2"]


_DETAILS = {}


def record(number, ok, detail):
    _DETAILS[number] = (ok, detail)
    ACCEPTANCE[number] = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def random_psi(seed):
    """Seeded quadratic ``psi`` with no zero on the unit circle (so V has none there)."""
    rng = np.random.default_rng(seed)
    th = np.linspace(0, 2 * np.pi, 720, endpoint=False)
    while True:
        c = rng.normal(0, 0.6, len(MONOMIALS))
        const = float(rng.choice([-1.0, 1.0]))
        text = f"{const!r}" + "".join(f" + ({float(a)!r})*{m}" for a, m in zip(c, MONOMIALS))
        x, y = np.cos(th), np.sin(th)
        vals = const + c[0] * x + c[1] * y + c[2] * x * x + c[3] * x * y + c[4] * y * y
        if np.abs(vals).min() > 0.05 * np.abs(vals).max():
            return text


CRIT3_FIELDS = [f"(1 - x^2 - y^2)^2*({random_psi(seed)})" for seed in range(10)]


# 1 -----------------------------------------------------------------------------------------

def test_criterion_01_quadratic():
    start = time.perf_counter()
    D = PlanarDomain.ellipse(1.0, 1 / np.sqrt(2))
    certs = locate_zeros(conformal_defect("x^2 + 2*y^2"), D)
    rows = field_vs_flow_experiment("x^2 + 2*y^2", [0.01, 0.05], D)
    elapsed = time.perf_counter() - start
    ok = (certs.boundary.value == 0 and len(certs) == 0
          and all(r["flow_count"] == 0 for r in rows) and elapsed <= 5)
    record(1, ok, f"winding {certs.boundary.value}, field certificates {len(certs)}, flow "
                  f"certificates {[r['flow_count'] for r in rows]}, {elapsed:.1f}s")
    assert ok


# 2 -----------------------------------------------------------------------------------------

def test_criterion_02_r4():
    V = conformal_defect("(x^2 + y^2)^2 - 2*(x^2 + y^2)")
    certs = locate_zeros(V, DISC)
    th = np.linspace(0, 2 * np.pi, 200, endpoint=False)
    mag_err = np.abs(np.hypot(*V(np.cos(th), np.sin(th))) - 8).max()
    dist = np.hypot(*certs[0].location) if certs else np.inf
    x0, y0, x1, y1 = certs[0].box if certs else (1, 1, 1, 1)
    ok = (certs.boundary.value == 2 and len(certs) == 1 and certs[0].degree == 2
          and dist <= 1e-4 and x0 < 0 < x1 and y0 < 0 < y1 and mag_err <= 1e-8)
    record(2, ok, f"winding {certs.boundary.value}, {len(certs)} certificate(s) of degree "
                  f"{[c.degree for c in certs]}, |center| {dist:.1e}, ||V|-8| {mag_err:.1e}")
    assert ok


# 3 -----------------------------------------------------------------------------------------

def test_criterion_03_two_point_case_ii():
    sums, winds = [], []
    for H in CRIT3_FIELDS:
        certs = locate_zeros(conformal_defect(H), DISC)
        sums.append(certs.degree_sum)
        winds.append(int(certs.boundary.value))
    ok = sums == [2] * 10 and winds == [2] * 10
    record(3, ok, f"degree sums {sums}, windings {winds}")
    assert ok


# 4 -----------------------------------------------------------------------------------------

@pytest.mark.xfail(strict=True, reason="literal input violates the sign hypothesis; "
                                       "its defect field is constant")
def test_criterion_04_two_point_case_i():
    curve = BoundaryCurve.ellipse(1.0, 1 / np.sqrt(2))
    D = PlanarDomain(curve)
    H = "1 - x^2 - 2*y^2"
    chart = TubularChart(curve)
    t = np.linspace(0, curve.length, 400, endpoint=False)
    j = pullback_jet(H, chart, t, 0.0, 2)
    k, _ = curve.curvature_and_angle(t)
    term = j[0, 2] + k * j[0, 1]
    w = winding(conformal_defect(H), curve)
    certs = None
    try:
        certs = locate_zeros(conformal_defect(H), D)
    except NonIsolatedZeros:
        pass
    ok = w.value == 2 and certs is not None and certs.degree_sum == 2
    record(4, ok, f"winding {w.value} (V is the constant (-2, 0)); H_ss + k H_s ranges over "
                  f"[{term.min():.3f}, {term.max():.3f}] so the sign hypothesis fails; "
                  "see the passing case-i test in test_index.py")
    assert ok


# 5 -----------------------------------------------------------------------------------------

def test_criterion_05_boundary_formula():
    chart = TubularChart(DISC.curve)
    rng = np.random.default_rng(5)
    worst = 0.0
    for H in CRIT3_FIELDS:
        t = rng.uniform(0, DISC.curve.length, 100)
        x, y = DISC.curve.point(t)
        worst = max(worst, np.abs(conformal_defect(H)(x, y) - boundary_formula_V(H, chart, t)).max())
    ok = worst <= 1e-6
    record(5, ok, f"max |V(gamma(t)) - formula(t)| = {worst:.2e} over 10 fields x 100 points")
    assert ok


# 6 -----------------------------------------------------------------------------------------

def test_criterion_06_loewner():
    parts = []
    ok = True
    for n in (3, 4):
        certs = locate_zeros(loewner_field(f"(1 - x^2 - y^2)^{n}*(1 + 0.3*x + 0.2*y^2)", n), DISC)
        ok &= certs.boundary.value == n and certs.degree_sum == n
        parts.append(f"n={n}: winding {certs.boundary.value}, sum {certs.degree_sum}")
        V = loewner_field(f"(x^2 + y^2)^{n}", n)
        radial = locate_zeros(V, DISC)
        th = np.linspace(0, 2 * np.pi, 50, endpoint=False)
        mag = np.hypot(*V(0.5 * np.cos(th), 0.5 * np.sin(th)))
        expect = 2 ** n * np.prod(range(1, n + 1)) * 0.5 ** n
        rel = np.abs(mag / expect - 1).max()
        ok &= (len(radial) == 1 and radial[0].degree == n
               and np.hypot(*radial[0].location) <= radial[0].half_width * 2 and rel <= 1e-8)
        parts.append(f"radial {[c.degree for c in radial]} rel {rel:.1e}")
    record(6, ok, "; ".join(parts))
    assert ok


# 7 -----------------------------------------------------------------------------------------

def test_criterion_07_commutation():
    res = run_suites("commutation", seed=7)["commutation"]
    ok = res["max"] <= 1e-6 and len(res["residuals"]) == 4
    record(7, ok, f"max residual {res['max']:.2e} (n = 2, 3 on circle and ellipse, 100 probes)")
    assert ok


# 8 -----------------------------------------------------------------------------------------

def test_criterion_08_graph_pullback():
    from conformal_lab.symplecto import transversality_matrix
    suites = run_suites("all", seed=8)
    graph = suites["graph"]["max"]
    det = suites["determinant"]["residuals"]["random"]
    shear = np.linalg.det(transversality_matrix([[-1.0, 1.0], [0.0, -1.0]]))
    ok = graph <= 1e-15 and det <= 1e-10 and shear == 0.0
    record(8, ok, f"pullback {graph:.1e}, determinant {det:.1e}, shear det {float(shear)!r}")
    assert ok


# 9 -----------------------------------------------------------------------------------------

@pytest.mark.parametrize("K", ["(1 - x^2 - y^2)^2", "(1 - x^2 - y^2)^2*(1 + 0.2*x)"])
def test_criterion_09_moderate_maps(K):
    start = time.perf_counter()
    F = flow_as_map(K, 0.05, tol=1e-10)
    res = conformal_points_of_map(F, DISC)
    gf = recover_generating_function(F, DISC)
    rng = np.random.default_rng(9)
    r, th = np.sqrt(rng.uniform(0, 0.8, 40)), rng.uniform(0, 2 * np.pi, 40)
    rel = derivative_relations_check(gf.field, F, np.column_stack([r * np.cos(th), r * np.sin(th)]))
    elapsed = time.perf_counter() - start
    ok = (res.moderateness.value >= 3 and res.boundary_fix_residual <= 1e-9
          and res.boundary.value == 2 and res.degree_sum == 2
          and gf.closedness_residual <= 1e-6 and rel <= 1e-4
          and res.boundary_identity_residual <= 1e-4 and elapsed <= 60)
    line = (f"[{K}] moderate {res.moderateness.value:.2f}, fix {res.boundary_fix_residual:.0e}, "
            f"winding {res.boundary.value}, sum {res.degree_sum}, closed "
            f"{gf.closedness_residual:.0e}, relations {rel:.0e}, boundary identity "
            f"{res.boundary_identity_residual:.0e}, {elapsed:.0f}s")
    if 9 in _DETAILS:
        prev_ok, prev_line = _DETAILS[9]
        record(9, ok and prev_ok, prev_line + "; " + line)
    else:
        record(9, ok, line)
    assert ok


# 10 ----------------------------------------------------------------------------------------

def test_criterion_10_riemannian():
    sums, winds = [], []
    for H in CRIT3_FIELDS:
        certs = locate_zeros(riemannian_defect(H, GFAC), DISC)
        sums.append(certs.degree_sum)
        winds.append(int(certs.boundary.value))
    ok = sums == [2] * 10 and winds == [2] * 10
    record(10, ok, f"degree sums {sums}, windings {winds}")
    assert ok


# 11 ----------------------------------------------------------------------------------------

def test_criterion_11_ellipsoid():
    start = time.perf_counter()
    Hs = SupportFunction.ellipsoid(4, 2, 1)
    res = find_umbilics(Hs)
    expected = np.array([[sx * 2 * np.sqrt(2 / 3), 0.0, sz * np.sqrt(1 / 3)]
                         for sx in (-1, 1) for sz in (-1, 1)])
    pts = np.array([u.surface_point for u in res.umbilics]).reshape(-1, 3)
    pos_err = (np.linalg.norm(pts[:, None] - expected[None], axis=2).min(axis=1).max()
               if len(pts) else np.inf)
    gaps = [principal_gap_oracle(Hs, u.normal) for u in res.umbilics]
    fh = [first_harmonic_defect(Hs, u.normal) for u in res.umbilics]
    rng = np.random.default_rng(11)
    normals = np.array([u.normal for u in res.umbilics])
    away = []
    while len(away) < 100:
        s = rng.standard_normal(3)
        s /= np.linalg.norm(s)
        if np.linalg.norm(normals - s, axis=1).min() > 0.1:
            away.append(principal_gap_oracle(Hs, s))
    elapsed = time.perf_counter() - start
    ok = (len(res.umbilics) == 4 and all(u.degree == 1 for u in res.umbilics)
          and res.degree_sum == 4 and res.line_index_sum == 2 and pos_err <= 1e-6
          and max(gaps) <= 1e-6 and min(away) >= 1e-2 and max(fh) <= 1e-6 and elapsed <= 120)
    record(11, ok, f"{len(res.umbilics)} umbilics, degrees {[u.degree for u in res.umbilics]}, "
                   f"line-index sum {res.line_index_sum}, position error {pos_err:.1e}, gap "
                   f"{max(gaps):.1e}, min gap elsewhere {min(away):.3f}, first-harmonic "
                   f"{max(fh):.1e}, {elapsed:.0f}s")
    assert ok


# 12 ----------------------------------------------------------------------------------------

def degree_oracle_fields():
    rng = np.random.default_rng(12)
    out = []
    while len(out) < 20:
        zeros = []
        spec = {"roots": [], "conj_roots": [], "quadratics": []}
        for _ in range(rng.integers(1, 4)):
            kind = rng.choice(["roots", "conj_roots", "quadratics"], p=[0.45, 0.3, 0.25])
            m = int(rng.integers(1, 4)) if kind != "quadratics" else int(rng.integers(1, 3))
            a = complex(*rng.uniform(-0.7, 0.7, 2))
            if kind == "quadratics":
                spec[kind].append((a * a, m))
                zeros += [a, -a]
            elif kind == "roots":
                spec[kind].append((a, m))
                zeros.append(a)
            else:
                spec[kind].append((np.conj(a), m))
                zeros.append(a)
        z = np.array(zeros)
        sep = np.abs(z[:, None] - z[None]) + np.eye(len(z)) * 9
        if np.abs(z).max() <= 0.8 and sep.min() >= 0.25:
            out.append(spec)
    return out


def test_criterion_12_degree_oracle():
    degree_ok = 0
    location_ok = 0
    worst = 0.0
    for spec in degree_oracle_fields():
        V, analytic = complex_factor_field(**spec)
        certs = locate_zeros(V, DISC)
        found = sorted((round(c.location[0], 3), round(c.location[1], 3), c.degree) for c in certs)
        matched = []
        for c in certs:
            d = [abs(complex(*c.location) - z) for z, _ in analytic]
            matched.append(analytic[int(np.argmin(d))][1] == c.degree and min(d) <= 2 * c.half_width)
        degree_ok += (all(matched) and len(certs) == len(analytic)
                      and sorted(c.degree for c in certs) == sorted(m for _, m in analytic))
        grid, spacing = sign_grid_zeros(V, (-1.1, -1.1, 1.1, 1.1), n=2000)
        inside = grid[np.hypot(grid[:, 0], grid[:, 1]) < 1]
        tol = 2 * spacing + max(c.half_width for c in certs)
        pair = (len(inside) == len(certs) and all(
            min(np.hypot(*(g - np.array(c.location))) for c in certs) <= tol for g in inside))
        if pair:
            worst = max(worst, max(min(np.hypot(*(g - np.array(c.location))) for c in certs)
                                   for g in inside))
        location_ok += pair
        assert found is not None
    ok = degree_ok == 20 and location_ok == 20
    record(12, ok, f"degrees match {degree_ok}/20, sign-grid locations match {location_ok}/20 "
                   f"(worst offset {worst:.1e})")
    assert ok


# 13 ----------------------------------------------------------------------------------------

def test_criterion_13_degenerate():
    outcomes = []
    try:
        locate_zeros(conformal_defect("(x^2 + y^2)/2"), DISC)
        outcomes.append("scalar Hessian: no error")
    except NonIsolatedZeros:
        outcomes.append("scalar Hessian: NonIsolatedZeros")
    try:
        conformal_points_of_map(PlanarMap.identity(), DISC)
        outcomes.append("identity: no error")
    except NonIsolatedZeros:
        outcomes.append("identity: NonIsolatedZeros")
    witness = None
    try:
        # psi = 1 - x vanishes at (1, 0), so does V
        locate_zeros(conformal_defect("(1 - x^2 - y^2)^2*(1 - x)"), DISC)
        outcomes.append("boundary zero: no error")
    except FieldVanishesOnCurve as exc:
        witness = exc.location
        outcomes.append(f"boundary zero: FieldVanishesOnCurve at ({witness[0]:.4f}, "
                        f"{witness[1]:.4f})")
    ok = (outcomes[0].endswith("NonIsolatedZeros") and outcomes[1].endswith("NonIsolatedZeros")
          and witness is not None and np.hypot(witness[0] - 1, witness[1]) <= 0.05)
    record(13, ok, "; ".join(outcomes))
    assert ok
