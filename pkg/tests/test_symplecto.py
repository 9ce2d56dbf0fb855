import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conformal_lab.domain import PlanarDomain
from conformal_lab.errors import (ClosednessViolation, DegenerateDenominator, NonIsolatedZeros,
                                  NotIdentityOnBoundary, NotModerate, NotSymplecticAtProbe)
from conformal_lab.fields import PlanarMap, ScalarField
from conformal_lab.flow import flow_as_map
from conformal_lab.symplecto import (GRAPH_MATRIX, GeneratingFunction, conformal_points_of_map,
                                     derivative_relations_check, graph_pullback_residual,
                                     graph_transform, graph_transform_inverse, invert_midpoint,
                                     map_from_generating_function, midpoint, midpoint_diagnostics,
                                     moderateness, recover_generating_function,
                                     transversality_determinant_check, transversality_matrix,
                                     transversality_residuals)
from conformal_lab.verify import random_symplectic_jacobians

DISC = PlanarDomain.disc()
TWIST = "(3.141592653589793*(1 - x^2 - y^2)^2)"


@pytest.fixture(scope="module")
def radial_flow():
    return flow_as_map("(1 - x^2 - y^2)^2", 0.05)


def test_graph_transform_examples():
    p = graph_transform((1.0, 2.0), (1.0, 2.0))
    assert p.w1 == (1.0, 2.0) and p.w2 == (0.0, 0.0)
    q = graph_transform((1.0, 0.0), (0.0, 0.0))
    assert q.w1 == (0.5, 0.0) and q.w2 == (0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_graph_round_trip(c):
    p = graph_transform((c[0], c[1]), (c[2], c[3]))
    back = graph_transform_inverse(p.w1, p.w2)
    np.testing.assert_allclose(back.z1 + back.z2, p.z1 + p.z2, atol=1e-14 * max(1, max(map(abs, c))))
    np.testing.assert_allclose(GRAPH_MATRIX @ np.array(c), p.w1 + p.w2, atol=1e-14)


def test_pullback_identity_is_exact():
    assert graph_pullback_residual() <= 1e-15


def test_transversality_identity(rng):
    jac = random_symplectic_jacobians(100, rng)
    assert transversality_residuals(jac).max() <= 1e-10
    assert np.linalg.det(transversality_matrix(np.eye(2))) == pytest.approx(4.0)
    assert np.linalg.det(transversality_matrix([[-1.0, 1.0], [0.0, -1.0]])) == 0.0


def test_transversality_rejects_non_symplectic():
    with pytest.raises(NotSymplecticAtProbe):
        transversality_residuals(np.array([[[2.0, 0.0], [0.0, 1.0]]]))


def test_transversality_on_a_map(radial_flow, rng):
    assert transversality_determinant_check(radial_flow, rng.uniform(-0.7, 0.7, (20, 2))) <= 1e-10


def test_moderateness_examples(radial_flow):
    assert moderateness(PlanarMap.identity(), DISC).value == pytest.approx(4.0)
    shear = moderateness(PlanarMap.from_components("-x + y", "-y"), DISC)
    assert shear.value == 0.0 and not shear.moderate
    flow = moderateness(radial_flow, DISC)
    assert flow.moderate and flow.value >= 3.5


def test_midpoint_inversion(radial_flow, rng):
    x, y = rng.uniform(-0.6, 0.6, (2, 40))
    u, v = midpoint(radial_flow, x, y)
    xb, yb = invert_midpoint(radial_flow, u, v)
    np.testing.assert_allclose(np.stack([xb, yb]), np.stack([x, y]), atol=1e-10)


def test_midpoint_diagnostics(radial_flow):
    assert midpoint_diagnostics(PlanarMap.identity(), DISC)["ok"]
    assert midpoint_diagnostics(radial_flow, DISC, samples=500, probes=40)["ok"]


def test_twist_map_is_flagged():
    # area-preserving twist: rotation by pi at the center, identity on the circle
    F = PlanarMap.from_components(f"x*cos({TWIST}) - y*sin({TWIST})",
                                  f"x*sin({TWIST}) + y*cos({TWIST})", symplectic_claimed=True)
    assert not moderateness(F, DISC).moderate
    report = midpoint_diagnostics(F, DISC, samples=1000, probes=20)
    assert not report["ok"] and report["injectivity_violations"] > 0
    with pytest.raises(NotModerate):
        conformal_points_of_map(F, DISC)


def test_identity_generating_function():
    gf = recover_generating_function(PlanarMap.identity(), DISC, probes=16)
    assert gf.closedness_residual <= 1e-12
    assert np.abs(gf.value(np.array([0.3, -0.5]), np.array([0.1, 0.2]))).max() <= 1e-12


def test_generating_function_of_short_flow(rng):
    # first order in eps: H = -eps (K - K(base))
    eps = 1e-3
    K = "(1 - x^2 - y^2)^2*(1 + 0.2*x)"
    Kf = ScalarField.from_expression(K)
    gf = GeneratingFunction(flow_as_map(K, eps, tol=1e-12), DISC, base=(0.0, 0.0))
    u, v = rng.uniform(-0.6, 0.6, (2, 8))
    err = np.abs(gf.value(u, v) + eps * (Kf(u, v) - Kf(0.0, 0.0))).max()
    assert err <= 10 * eps ** 2


def test_generating_function_paths_agree(radial_flow):
    gf = GeneratingFunction(radial_flow, DISC, base=(0.1, -0.05))
    u, v = np.array([0.4, -0.3]), np.array([0.3, 0.5])
    np.testing.assert_allclose(gf.value(u, v, "hx"), gf.value(u, v, "vy"), atol=1e-9)


def test_recovered_flow_diagnostics(radial_flow):
    gf = recover_generating_function(radial_flow, DISC, probes=16)
    assert gf.closedness_residual <= 1e-6
    assert gf.boundary_gradient <= 1e-6
    t = np.linspace(0, 2 * np.pi, 24, endpoint=False)
    a, b, c = gf.hessian(np.cos(t), np.sin(t))
    assert np.abs(a * c - b * b).max() <= 1e-6


def test_closedness_violation():
    F = PlanarMap.from_components("x + 0.05*y*(1 - x^2 - y^2)", "y + 0.05*y*(1 - x^2 - y^2)")
    with pytest.raises(ClosednessViolation):
        recover_generating_function(F, DISC, probes=16)


def test_relations_for_generated_map(rng):
    H = ScalarField.from_expression("0.01*(1 - x^2 - y^2)^2")
    F = map_from_generating_function(H)
    probes = rng.uniform(-0.7, 0.7, (50, 2))
    assert derivative_relations_check(H, F, probes) <= 1e-6
    assert F.symplectic_residual(probes[:, 0], probes[:, 1]).max() <= 1e-10


def test_relations_identity():
    F = PlanarMap.identity()
    assert derivative_relations_check(ScalarField.constant(0.0), F, np.zeros((3, 2))) == 0.0


def test_degenerate_denominator():
    H = ScalarField.from_expression("2*x*y")
    with pytest.raises(DegenerateDenominator):
        derivative_relations_check(H, PlanarMap.identity(), np.zeros((1, 2)))


def test_identity_map_is_degenerate():
    with pytest.raises(NonIsolatedZeros):
        conformal_points_of_map(PlanarMap.identity(), DISC)


def test_boundary_must_be_fixed():
    with pytest.raises(NotIdentityOnBoundary):
        conformal_points_of_map(PlanarMap.rotation(0.1), DISC)


@pytest.mark.slow
def test_two_conformal_points_of_a_flow(radial_flow):
    res = conformal_points_of_map(radial_flow, DISC)
    assert res.boundary.value == 2 and res.degree_sum == 2
    assert res.boundary_fix_residual <= 1e-9


@pytest.mark.slow
def test_perturbed_flow_has_two_simple_points():
    F = flow_as_map("(1 - x^2 - y^2)^2*(1 + 0.3*x + 0.2*y)", 0.1)
    res = conformal_points_of_map(F, DISC, consistency=True)
    assert sorted(c.degree for c in res.certificates) == [1, 1]
    a, b = (np.array(c.location) for c in res.certificates)
    assert np.hypot(*(a - b)) > 0.1
    assert res.consistency
