import math

import numpy as np
import pytest

from antipode.config import Config
from antipode.exceptions import DimensionMismatch, NotConverged
from antipode.geometry import as_array, multiindex_points, rigidity_bound_holds
from antipode.maps import make_inclusion, make_random_trig, random_sphere_points
from antipode.solvers.certificate import verify_certificate
from antipode.solvers.manifold_solver import (GroupElement, ManifoldSolver, build_simplex_problem, diagonal_action,
                                              group_param_count, sigma)

from tests.antipode.oracles import exact_kernel_vector


@pytest.mark.parametrize("r", [1, 2, 3])
def test_group_elements_are_rotations(r):
    rng = np.random.default_rng(r)
    for _ in range(5):
        params = rng.standard_normal(group_param_count(r))
        g = GroupElement.from_params(r, params)
        assert g.matrix.shape == (2 ** r, 2 ** r)
        assert g.orthogonality_error() < 1e-12
        assert np.allclose(g.negated().matrix, -g.matrix, atol=1e-14)


def test_group_identity_and_parameter_checks():
    assert np.array_equal(GroupElement.identity(2).matrix, np.eye(4))
    assert np.allclose(GroupElement.identity(3).matrix, np.eye(8))
    with pytest.raises(ValueError):
        GroupElement.from_params(2, [1.0, 0.0])
    with pytest.raises(ValueError):
        GroupElement.from_params(2, np.zeros(4))
    with pytest.raises(ValueError):
        group_param_count(-1)


@pytest.mark.parametrize("n, r, s", [(2, 1, 0), (3, 1, 1), (4, 2, 0), (5, 2, 1), (7, 2, 3)])
def test_simplex_problem_splits_along_the_involution(n, r, s):
    problem = build_simplex_problem(n)
    assert (problem.r, problem.s) == (r, s)
    assert problem.codomain_dim == n + 2 ** r - 1
    assert problem.v_plus.shape == (n, 2 ** r)
    assert problem.v_minus.shape == (n, s)
    assert np.allclose(problem.tau @ problem.tau, np.eye(n), atol=1e-12)
    assert np.allclose(problem.v_plus.T @ problem.v_minus, 0.0, atol=1e-12)
    assert np.allclose(problem.tau @ problem.v_plus, problem.v_plus, atol=1e-12)
    assert np.allclose(problem.tau @ problem.v_minus, -problem.v_minus, atol=1e-12)
    # tau permutes the vertices
    assert np.allclose(problem.vertices @ problem.tau.T, problem.vertices[problem.permutation], atol=1e-12)


def test_embedding_is_orthogonal_and_fixes_v_minus():
    problem = build_simplex_problem(5)
    g = GroupElement.from_params(2, [0.3, -0.5, 0.2, 0.9])
    embedded = problem.embed(g)
    assert np.allclose(embedded.T @ embedded, np.eye(5), atol=1e-12)
    assert np.allclose(embedded @ problem.v_minus, problem.v_minus, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        problem.embed(GroupElement.identity(1))


def test_sigma_at_a_basis_vector_is_the_map_value():
    odd_map = make_random_trig(4, 3, seed=2)
    w = random_sphere_points(4, 3, np.random.default_rng(0))
    value = sigma(odd_map, GroupElement.identity(1), w, [0.0, 1.0, 0.0])
    assert np.allclose(value, odd_map.evaluate(w[1]), atol=1e-12)


def test_sigma_is_odd_in_g():
    odd_map = make_random_trig(4, 7, seed=5)
    w = random_sphere_points(4, 5, np.random.default_rng(1))
    mu = np.random.default_rng(2).standard_normal(5)
    g = GroupElement.from_params(2, [0.1, 0.7, -0.4, 0.2])
    assert np.allclose(sigma(odd_map, g.negated(), w, mu), -sigma(odd_map, g, w, mu), atol=1e-13)
    assert np.array_equal(sigma(odd_map, g, w, -mu), -sigma(odd_map, g, w, mu))


def test_sigma_equivariance_on_the_simplex():
    # sigma(-g, mu) = -sigma(g, T mu)
    problem = build_simplex_problem(3)
    odd_map = make_random_trig(3, problem.codomain_dim, seed=4)
    rng = np.random.default_rng(3)
    for _ in range(5):
        g = GroupElement.from_params(1, rng.uniform(0, 2 * math.pi, 1))
        mu = rng.standard_normal(4)
        left = sigma(odd_map, g.negated(), problem.vertices, mu, problem)
        right = -sigma(odd_map, g, problem.vertices, problem.transform(mu), problem)
        assert np.abs(left - right).max() <= 1e-10


def test_diagonal_action_needs_whole_blocks():
    g = GroupElement.identity(2)
    assert diagonal_action(g, 8).shape == (8, 8)
    with pytest.raises(DimensionMismatch):
        diagonal_action(g, 6)


@pytest.mark.parametrize("n", range(2, 6))
def test_inclusion_weights_are_uniform(manifold_solver, n):
    odd_map = make_inclusion(n, build_simplex_problem(n).codomain_dim)
    cert = manifold_solver.solve_simplex_theorem(odd_map)
    assert cert.lambdas == pytest.approx(np.full(n + 1, 1.0 / (n + 1)), abs=1e-6)
    assert cert.base["restart"] == 0


@pytest.mark.parametrize("n", range(2, 6))
def test_simplex_certificates_for_random_maps(manifold_solver, n):
    codomain = build_simplex_problem(n).codomain_dim
    bound = math.pi - math.acos(1.0 / n)
    for seed in range(5):
        odd_map = make_random_trig(n, codomain, seed=100 + seed)
        cert = manifold_solver.solve_simplex_theorem(odd_map, seed=seed)
        assert cert.residual <= 1e-6
        assert cert.diameter <= bound + 1e-9
        assert cert.hull["verdict"] == "inside"
        assert rigidity_bound_holds(cert.points)
        assert verify_certificate(cert).passed


def test_circle_and_simplex_routes_agree_for_n_2(manifold_solver, circle_solver):
    odd_map = make_random_trig(2, 3, seed=12)
    by_simplex = manifold_solver.solve_simplex_theorem(odd_map)
    by_circle = circle_solver.solve_theorem_1(odd_map)
    for cert in (by_simplex, by_circle):
        assert cert.residual <= 1e-8
        assert cert.diameter <= 2 * math.pi / 3 + 1e-9


def test_kernel_route_matches_exact_elimination(manifold_solver):
    rng = np.random.default_rng(11)
    for instance in range(50):
        k = int(rng.integers(1, 7))
        odd_map = make_random_trig(3, k, seed=instance)
        w = random_sphere_points(3, k + 1, rng)
        cert = manifold_solver.solve_lemma_gen(odd_map, w)
        assert cert.base["r"] == 0

        exact = np.array([float(x) for x in exact_kernel_vector(odd_map.evaluate_many(w).T)])
        exact /= np.abs(exact).sum()
        if exact[np.argmax(np.abs(exact))] < 0:
            exact = -exact
        mu = cert.lambdas * np.asarray(cert.signs)
        assert np.abs(mu - exact).max() <= 1e-9


def test_circle_branch_on_multiindex_points(manifold_solver):
    w = as_array(multiindex_points(2, 1, 1)[:3])
    odd_map = make_random_trig(4, 3, seed=21)
    cert = manifold_solver.solve_lemma_gen(odd_map, w, r=1)
    assert cert.base["r"] == 1
    assert cert.residual <= 1e-8
    assert cert.diameter <= math.pi - math.acos(0.5) + 1e-9
    assert cert.diameter <= math.pi - math.acos(0.75)


def test_quaternion_branch(manifold_solver):
    w = random_sphere_points(4, 5, np.random.default_rng(31))
    odd_map = make_random_trig(4, 7, seed=32)
    cert = manifold_solver.solve_lemma_gen(odd_map, w)
    assert cert.base["r"] == 2
    assert cert.residual <= 1e-6
    assert len(cert.base["group"]["params"]) == 4
    assert verify_certificate(cert).passed


def test_exponential_chart_branch(manifold_solver):
    # 9 points of S(R^8) and a map into R^15 give blocks of 8 coordinates
    w = random_sphere_points(8, 9, np.random.default_rng(51))
    odd_map = make_random_trig(8, 15, seed=52)
    cert = manifold_solver.solve_lemma_gen(odd_map, w, r=3)
    assert cert.base["r"] == 3
    assert len(cert.base["group"]["params"]) == 28
    assert cert.residual <= 1e-6
    assert verify_certificate(cert).passed
    g = GroupElement.from_params(3, cert.base["group"]["params"], sign=cert.base["group"]["sign"])
    assert g.orthogonality_error() < 1e-12
    assert np.linalg.det(g.matrix) == pytest.approx(1.0)


def test_padded_simplex_prunes_to_m_plus_n_points(manifold_solver):
    odd_map = make_random_trig(4, 5, seed=41)
    cert = manifold_solver.solve_padded_simplex(odd_map)
    assert len(cert.points) <= 6
    assert "reduced" in cert.flags
    assert cert.map.codomain_dim == 5
    assert cert.residual <= 1e-6
    assert cert.diameter <= math.pi - math.acos(1 / 4) + 1e-9


def test_padded_simplex_rejects_large_m(manifold_solver):
    with pytest.raises(ValueError):
        manifold_solver.solve_padded_simplex(make_random_trig(4, 9, seed=1))


@pytest.mark.parametrize("n, m", [(4, 2), (3, 1), (5, 2)])
def test_fixed_configuration(manifold_solver, n, m):
    odd_map = make_random_trig(n, m + n - 1, seed=n * 10 + m)
    cert = manifold_solver.solve_fixed_configuration(odd_map)
    assert len(cert.points) == m + n
    assert cert.residual <= 1e-9
    assert cert.diameter <= math.pi - math.acos(1 / (n // m)) + 1e-9


def test_search_budget_exhaustion_keeps_the_best_certificate(mock_logger):
    solver = ManifoldSolver(Config(progress=False, threads=1, max_evals=1, oddness_samples=100), mock_logger)
    with pytest.raises(NotConverged) as excinfo:
        solver.solve_simplex_theorem(make_random_trig(3, 4, seed=3), restarts=1)
    best = excinfo.value.best
    assert best is not None
    assert best.base["restart"] == 0
    assert best.residual > 1e-9


def test_dimension_checks(manifold_solver):
    with pytest.raises(DimensionMismatch):
        manifold_solver.solve_simplex_theorem(make_random_trig(3, 5))
    with pytest.raises(DimensionMismatch):
        manifold_solver.solve_lemma_gen(make_random_trig(4, 5), random_sphere_points(4, 4, np.random.default_rng(0)))
    with pytest.raises(DimensionMismatch):
        manifold_solver.solve_lemma_gen(make_random_trig(3, 3), random_sphere_points(3, 3, np.random.default_rng(0)))
