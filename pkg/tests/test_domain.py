import numpy as np
import pytest

from conformal_lab.domain import (BoundaryCurve, PlanarDomain, TubularChart, boundary_formula_V,
                                  boundary_formula_Vn, check_constant_on_boundary, collar_loewner,
                                  pullback_jet, verify_commutation)
from conformal_lab.errors import (BoundaryJetNotFlat, DegenerateTangent, NotConstantOnBoundary,
                                  OutsideCollar)
from conformal_lab.fields import ScalarField, conformal_defect, loewner_field

CIRCLE = BoundaryCurve.circle()
ELLIPSE = BoundaryCurve.ellipse(2.0, 1.0)


def test_circle_length_and_curvature():
    assert CIRCLE.length == pytest.approx(2 * np.pi, rel=1e-12)
    k, _ = CIRCLE.curvature_and_angle(np.linspace(0, 6, 7))
    np.testing.assert_allclose(k, 1.0, rtol=1e-10)


def test_ellipse_vertex_curvature_and_fd_angle():
    k, _ = ELLIPSE.curvature_and_angle(0.0)
    assert float(k) == pytest.approx(2.0, rel=1e-10)
    t = np.linspace(0.1, ELLIPSE.length - 0.1, 40)
    h = 1e-5
    _, a_plus = ELLIPSE.curvature_and_angle(t + h)
    _, a_minus = ELLIPSE.curvature_and_angle(t - h)
    k, _ = ELLIPSE.curvature_and_angle(t)
    np.testing.assert_allclose((a_plus - a_minus) / (2 * h), k, rtol=1e-6)


@pytest.mark.parametrize("curve", [CIRCLE, ELLIPSE,
                                   BoundaryCurve.parametric("cos(6.283185307179586*tau)",
                                                            "-0.5*sin(6.283185307179586*tau)")])
def test_turning_is_one_full_turn(curve):
    assert curve.total_turning() == pytest.approx(2 * np.pi, abs=1e-8)


def test_clockwise_input_is_reoriented():
    cw = BoundaryCurve.parametric("cos(6.283185307179586*tau)", "-0.5*sin(6.283185307179586*tau)")
    k, _ = cw.curvature_and_angle(np.linspace(0, cw.length, 10, endpoint=False))
    assert np.all(k > 0)


def test_degenerate_tangent():
    with pytest.raises(DegenerateTangent):
        BoundaryCurve.parametric("0*tau", "0*tau")


def test_arclength_reparameterization_has_unit_speed():
    t = np.linspace(0, ELLIPSE.length, 50, endpoint=False)
    d = ELLIPSE.derivatives_t(t, 1)
    np.testing.assert_allclose(np.hypot(d[1, 0], d[1, 1]), 1.0, atol=1e-9)


def test_domain_inside_and_bbox():
    D = PlanarDomain.ellipse(2.0, 1.0)
    assert D.contains(0.0, 0.0) and D.contains(1.9, 0.0)
    assert not D.contains(2.1, 0.0) and not D.contains(0.0, 1.01)
    assert not D.contains(5.0, 5.0)
    np.testing.assert_allclose(D.bbox, (-2, -1, 2, 1), atol=1e-9)


def test_nearest_boundary_point_lies_on_curve():
    D = PlanarDomain.disc()
    bx, by = D.nearest_boundary_point(np.array([2.0, 0.0, -3.0]), np.array([0.0, 1.5, -3.0]))
    np.testing.assert_allclose(np.hypot(bx, by), 1.0, atol=1e-14)
    np.testing.assert_allclose(np.arctan2(by, bx), [0.0, np.pi / 2, -3 * np.pi / 4], atol=1e-6)


def test_distance_to_boundary():
    D = PlanarDomain.disc()
    np.testing.assert_allclose(D.distance_to_boundary([0.0, 0.5, 2.0], [0.0, 0.0, 0.0]),
                               [1.0, 0.5, 1.0], atol=1e-6)


def test_collar_width_bound():
    for curve in (CIRCLE, ELLIPSE):
        chart = TubularChart(curve)
        assert chart.s_max * curve.max_abs_curvature() <= 0.5 + 1e-12


def test_pullback_radial_closed_form():
    chart = TubularChart(CIRCLE)
    t = np.linspace(0, 2 * np.pi, 17)
    j = pullback_jet("x^2 + y^2", chart, t, 0.0, 2)
    np.testing.assert_allclose(j[0, 1], -2.0, atol=1e-12)
    np.testing.assert_allclose(j[0, 2], 2.0, atol=1e-12)
    np.testing.assert_allclose(j[1, 0], 0.0, atol=1e-12)


def test_pullback_first_order_is_directional(rng):
    chart = TubularChart(ELLIPSE)
    H = ScalarField.from_expression("sin(x)*y + x^2")
    t = rng.uniform(0, ELLIPSE.length, 20)
    j = pullback_jet(H, chart, t, 0.0, 1)
    d = ELLIPSE.derivatives_t(t, 1)
    x, y = d[0, 0], d[0, 1]
    h = H.jet(x, y, 1)
    tx, ty = d[1, 0], d[1, 1]
    np.testing.assert_allclose(j.value, h.value, atol=1e-12)
    np.testing.assert_allclose(j[1, 0], h[1, 0] * tx + h[0, 1] * ty, atol=1e-10)
    np.testing.assert_allclose(j[0, 1], -h[1, 0] * ty + h[0, 1] * tx, atol=1e-10)


def test_outside_collar():
    chart = TubularChart(CIRCLE)
    with pytest.raises(OutsideCollar):
        pullback_jet("x", chart, 0.0, 0.9, 1)


def test_boundary_formula_radial():
    chart = TubularChart(CIRCLE)
    t = np.linspace(0, 2 * np.pi, 30, endpoint=False)
    v = boundary_formula_V("(1 - x^2 - y^2)^2", chart, t)
    _, alpha = CIRCLE.curvature_and_angle(t)
    np.testing.assert_allclose(v, 8 * np.stack([np.cos(2 * alpha), np.sin(2 * alpha)]), atol=1e-10)


@pytest.mark.parametrize("H,curve", [
    ("(1 - x^2 - y^2)^2*(1 + 0.4*x - 0.3*x*y + 0.2*y^2)", CIRCLE),
    ("(1 - x^2/4 - y^2)^2*exp(0.3*x)", ELLIPSE),
    ("1 - x^2/4 - y^2", ELLIPSE),
])
def test_boundary_formula_matches_defect(H, curve, rng):
    chart = TubularChart(curve)
    t = rng.uniform(0, curve.length, 100)
    d = curve.derivatives_t(t, 0)
    direct = conformal_defect(H)(d[0, 0], d[0, 1])
    np.testing.assert_allclose(boundary_formula_V(H, chart, t), direct, atol=1e-6)


def test_case_i_formula_aligned_with_double_angle():
    # H = 1 - x^2 - c y^2 on x^2 + c y^2 = 1 with c = 2
    curve = BoundaryCurve.ellipse(1.0, 1 / np.sqrt(2))
    chart = TubularChart(curve)
    t = np.linspace(0, curve.length, 64, endpoint=False)
    v = boundary_formula_V("1 - x^2 - 2*y^2", chart, t)
    _, alpha = curve.curvature_and_angle(t)
    j = pullback_jet("1 - x^2 - 2*y^2", chart, t, 0.0, 2)
    k, _ = curve.curvature_and_angle(t)
    weight = j[0, 2] + k * j[0, 1]
    dot = v[0] * np.cos(2 * alpha) + v[1] * np.sin(2 * alpha)
    nz = np.abs(weight) > 1e-6
    assert np.all(np.sign(dot[nz]) == np.sign(weight[nz]))


def test_not_constant_on_boundary():
    with pytest.raises(NotConstantOnBoundary):
        check_constant_on_boundary("x", TubularChart(CIRCLE))


def test_loewner_boundary_formula_magnitude():
    chart = TubularChart(CIRCLE)
    t = np.linspace(0, 2 * np.pi, 25, endpoint=False)
    v = boundary_formula_Vn("(1 - x^2 - y^2)^3", chart, t, 3)
    np.testing.assert_allclose(np.hypot(*v), 48.0, rtol=1e-10)
    d = CIRCLE.derivatives_t(t, 0)
    np.testing.assert_allclose(v, loewner_field("(1 - x^2 - y^2)^3", 3)(d[0, 0], d[0, 1]),
                               atol=1e-6)


def test_loewner_formula_n2_reduces():
    chart = TubularChart(ELLIPSE)
    t = np.linspace(0, ELLIPSE.length, 20, endpoint=False)
    H = "(1 - x^2/4 - y^2)^2*(2 + x)"
    # V_2 = -V, so the two formulas differ by a sign
    np.testing.assert_allclose(boundary_formula_Vn(H, chart, t, 2),
                               -boundary_formula_V(H, chart, t), atol=1e-10)


def test_flatness_violation_named():
    with pytest.raises(BoundaryJetNotFlat) as info:
        boundary_formula_Vn("(1 - x^2 - y^2)^2", TubularChart(CIRCLE), 0.0, 3)
    assert info.value.order == 2


@pytest.mark.parametrize("curve", [CIRCLE, ELLIPSE])
def test_commutation_identity(curve, rng):
    chart = TubularChart(curve)
    probes = np.column_stack([rng.uniform(0, curve.length, 100),
                              rng.uniform(-0.9, 0.9, 100) * chart.s_max])
    f = "sin(2*x + 0.3)*exp(y) + x^2*y - cos(y)"
    assert verify_commutation(1, f, chart, probes) <= 1e-14
    for n in (2, 3):
        assert verify_commutation(n, f, chart, probes) <= 1e-6


def test_commutation_circle_example():
    chart = TubularChart(CIRCLE)
    L = CIRCLE.length
    probes = np.column_stack([np.linspace(0, L, 30), np.linspace(-0.4, 0.4, 30)])
    assert verify_commutation(2, f"cos(6.283185307179586*x/{L!r})*y^2", chart, probes) <= 1e-8


def test_collar_loewner_matches_cartesian(rng):
    chart = TubularChart(ELLIPSE)
    t = rng.uniform(0, ELLIPSE.length, 30)
    s = rng.uniform(-0.4, 0.4, 30) * chart.s_max
    H = "x^3*y + exp(0.2*y)*x"
    z = collar_loewner(H, chart, t, s, 3)
    x, y = chart.forward(t, s)
    v = loewner_field(H, 3)(x, y)
    np.testing.assert_allclose(np.stack([z.real, z.imag]), v, atol=1e-9)
