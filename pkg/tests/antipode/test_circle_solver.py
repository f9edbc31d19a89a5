import math

import numpy as np
import pytest

from antipode.exceptions import DegenerateSquares, DimensionMismatch, IllConditioned
from antipode.geometry import SpherePoint, as_array, rigidity_bound_holds, roots_of_unity_points, rotate
from antipode.maps import make_inclusion, make_poly_eval, make_random_trig, make_user_table, with_codomain
from antipode.solvers.certificate import verify_certificate
from antipode.solvers.circle_solver import delta_invariant_check, find_circle_zero, phi
from antipode.solvers.linalg import dependence_coefficients, split_signs


def test_phi_is_antiperiodic():
    odd_map = make_random_trig(2, 5, degree=5, seed=3)
    w = roots_of_unity_points(2)
    for theta in np.linspace(0.0, math.pi, 7):
        value = phi(odd_map, w, theta)
        assert phi(odd_map, w, theta + math.pi) == pytest.approx(-value, abs=1e-12 * max(1.0, abs(value)))


def test_phi_needs_matching_point_count():
    with pytest.raises(DimensionMismatch):
        phi(make_random_trig(2, 5, degree=5), roots_of_unity_points(1), 0.0)


def test_find_circle_zero_lands_on_a_zero():
    odd_map = make_random_trig(2, 3, degree=3, seed=1)
    w = roots_of_unity_points(1)
    zero = find_circle_zero(odd_map, w)
    assert not zero.degenerate
    assert 0.0 <= zero.theta <= math.pi
    assert abs(phi(odd_map, w, zero.theta)) <= 1e-10 * zero.scale


# monomial order [x, y, x^3, x^2 y, x y^2, y^3]; Re z^3 = x^3 - 3 x y^2
CUBIC_COEFFICIENTS = [
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, -3.0, 0.0],
]


def cubic_determinant(theta: float) -> float:
    angles = theta + 2 * math.pi * np.arange(3) / 3
    return float(np.linalg.det(np.array([np.cos(angles), np.sin(angles), np.cos(3 * angles)])))


def test_phi_matches_a_dense_grid_oracle():
    odd_map = make_random_trig(2, 3, degree=3, coefficients=CUBIC_COEFFICIENTS)
    w = roots_of_unity_points(1)
    grid = np.linspace(0.0, math.pi, 10001)
    oracle = np.array([cubic_determinant(theta) for theta in grid])
    assert phi(odd_map, w, 0.0) == pytest.approx(oracle[0], abs=1e-12)
    for theta, expected in list(zip(grid, oracle))[::997]:
        assert phi(odd_map, w, theta) == pytest.approx(expected, abs=1e-12)

    zero = find_circle_zero(odd_map, w)
    assert not zero.degenerate
    i = int(np.flatnonzero(np.sign(oracle[:-1]) * np.sign(oracle[1:]) < 0)[0])
    assert grid[i] <= zero.theta <= grid[i + 1]
    assert zero.theta == pytest.approx(math.pi / 6, abs=1e-10)
    assert abs(zero.value) <= 1e-10 * zero.scale


def test_cubic_map_certificate(circle_solver):
    odd_map = make_random_trig(2, 3, degree=3, coefficients=CUBIC_COEFFICIENTS)
    cert = circle_solver.solve_theorem_1(odd_map)
    assert cert.residual <= 1e-9
    assert cert.diameter <= 2 * math.pi / 3 + 1e-9
    direct = sum(weight * odd_map.evaluate(p) for weight, p in zip(cert.lambdas, cert.points.signed_coords()))
    assert np.linalg.norm(direct) <= 1e-9


def test_small_determinant_is_not_mistaken_for_degeneracy():
    # at k = 5 |phi| is tiny next to prod |column_j| although the columns have full rank
    w = roots_of_unity_points(5)
    for seed in (0, 7):
        odd_map = make_random_trig(2, 11, degree=11, seed=seed)
        zero = find_circle_zero(odd_map, w)
        assert not zero.degenerate
        assert "degenerate" not in zero.flags
        assert abs(phi(odd_map, w, zero.theta)) <= 1e-10 * zero.scale


def test_degenerate_branch_uses_theta_zero():
    # the inclusion S(C) into R^3 has rank two, so phi vanishes identically
    odd_map = make_inclusion(2, 3)
    w = roots_of_unity_points(1)
    zero = find_circle_zero(odd_map, w)
    assert zero.degenerate and zero.theta == 0.0
    columns = odd_map.evaluate_many(as_array(w)).T
    mu = dependence_coefficients(columns)
    assert np.abs(columns @ mu).max() < 1e-14


def test_dependence_coefficients_normalisation():
    rng = np.random.default_rng(2)
    columns = rng.standard_normal((4, 5))
    mu = dependence_coefficients(columns)
    assert np.abs(mu).sum() == pytest.approx(1.0)
    assert mu[np.argmax(np.abs(mu))] > 0
    assert np.linalg.norm(columns @ mu) < 1e-14


def test_dependence_coefficients_refuses_ambiguous_kernels():
    columns = np.zeros((3, 4))
    columns[0, 0] = columns[1, 1] = 1.0
    with pytest.raises(IllConditioned):
        dependence_coefficients(columns)


def test_split_signs():
    lambdas, signs = split_signs([0.5, -0.25, 0.0, -0.25])
    assert lambdas.tolist() == [0.5, 0.25, 0.0, 0.25]
    assert signs.tolist() == [1, -1, 1, -1]


@pytest.mark.parametrize("k", range(1, 6))
def test_roots_of_unity_certificates_for_random_maps(circle_solver, k):
    bound = math.pi - math.pi / (2 * k + 1)
    for seed in range(20):
        odd_map = make_random_trig(2, 2 * k + 1, degree=2 * k + 1, seed=seed)
        cert = circle_solver.solve_theorem_1(odd_map, seed=seed)
        assert cert.residual <= 1e-8
        assert cert.diameter <= bound + 1e-9
        assert cert.lambdas.min() >= 0 and cert.lambdas.sum() == pytest.approx(1.0, abs=1e-12)
        assert cert.hull["verdict"] == "inside"
        assert rigidity_bound_holds(cert.points)


@pytest.mark.parametrize("k", range(1, 5))
def test_poly_eval_delta_invariant(circle_solver, k):
    odd_map = with_codomain(make_poly_eval(k), 2 * k + 1)
    cert = circle_solver.solve_theorem_1(odd_map)
    assert "degenerate" in cert.flags
    assert cert.reports["delta_invariant"] <= 1e-6
    assert verify_certificate(cert).passed


def test_poly_eval_delta_invariant_at_a_rotated_start(circle_solver):
    odd_map = with_codomain(make_poly_eval(3), 7)
    z = SpherePoint(rotate(np.array([1.0, 0.0]), 0.4))
    cert = circle_solver.solve_theorem_1(odd_map, z=z)
    assert cert.reports["delta_invariant"] <= 1e-6


def test_delta_invariant_needs_distinct_squares():
    w = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(DegenerateSquares):
        delta_invariant_check(w, [0.4, 0.3, 0.3])


def test_inclusion_certificate_is_exact(circle_solver, mock_logger):
    cert = circle_solver.solve_theorem_1(make_inclusion(2, 3))
    assert cert.base["theta"] == 0.0
    assert cert.residual < 1e-14
    assert cert.lambdas == pytest.approx([1 / 3, 1 / 3, 1 / 3])
    mock_logger.log_solve.assert_any_call(
        "roots-of-unity", "degenerate", "determinant map vanishes identically, using theta = 0")


def test_roots_of_unity_route_rejects_wrong_dimensions(circle_solver):
    with pytest.raises(DimensionMismatch):
        circle_solver.solve_theorem_1(make_random_trig(2, 4, degree=3))
    with pytest.raises(DimensionMismatch):
        circle_solver.solve_theorem_1(make_random_trig(3, 3, degree=3))


def test_solver_refuses_maps_that_are_not_odd(circle_solver):
    points = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    table = make_user_table(points, np.array([[1.0, 0.0, 0.0]] * 4))
    with pytest.raises(ValueError):
        circle_solver.solve_lemma(table, points[:3])


def test_planar_restriction_reports_points_in_the_full_domain(circle_solver):
    # S^2 -> R^4 is padded to R^5 and solved on the first coordinate circle
    odd_map = make_random_trig(3, 4, degree=3, seed=8)
    cert = circle_solver.solve_planar_restriction(odd_map)
    assert cert.map.codomain_dim == 5
    assert cert.points.dim == 3
    assert np.abs(cert.points.signed_coords()[:, 2]).max() == 0.0
    assert cert.residual <= 1e-9
    assert cert.diameter <= math.pi - math.pi / 5 + 1e-9


def test_certificate_json_round_trip_still_verifies(circle_solver):
    cert = circle_solver.solve_theorem_1(make_random_trig(2, 5, degree=5, seed=4))
    restored = type(cert).from_json(cert.to_json())
    assert restored.to_json() == cert.to_json()
    assert verify_certificate(restored).passed


def test_verification_catches_tampering(circle_solver):
    cert = circle_solver.solve_theorem_1(make_random_trig(2, 3, degree=3, seed=4))
    cert.lambdas = cert.lambdas[::-1].copy()
    report = verify_certificate(cert)
    assert not report.passed
    cert = circle_solver.solve_theorem_1(make_random_trig(2, 3, degree=3, seed=4))
    cert.diameter += 0.01
    report = verify_certificate(cert)
    assert any("diameter mismatch" in failure for failure in report.failures)
