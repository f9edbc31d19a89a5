# antipode/solvers/linalg.py
from typing import Tuple

import numpy as np
import scipy.linalg

from antipode.exceptions import CaratheodoryError, IllConditioned

SINGULAR_GAP_TOL = 1e-12
RANK_TOL = 1e-10


def dependence_coefficients(columns: np.ndarray, gap_tol: float = SINGULAR_GAP_TOL) -> np.ndarray:
    """
    Coefficients mu, sum |mu_i| = 1, of a linear dependence among the columns.

    The direction is the right singular vector of the smallest singular value
    (zero for wide matrices). The sign is fixed so that the entry of largest
    magnitude is positive.
    """
    columns = np.atleast_2d(np.asarray(columns, dtype=float))
    count = columns.shape[1]
    if count < 2:
        raise ValueError("A linear dependence needs at least two columns")
    _, singular, vt = np.linalg.svd(columns, full_matrices=True)
    singular = np.concatenate([singular, np.zeros(count - singular.size)])
    scale = max(1.0, singular[0])
    if singular[-2] - singular[-1] <= gap_tol * scale:
        raise IllConditioned(
            f"Null direction is ambiguous: smallest singular values {singular[-2]:.3e} and {singular[-1]:.3e}")
    direction = vt[-1]
    mu = direction / np.abs(direction).sum()
    if mu[np.argmax(np.abs(mu))] < 0:
        mu = -mu
    return mu


def kernel_direction(columns: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """First basis vector of the numerical kernel, for when the null space is not a line."""
    kernel = scipy.linalg.null_space(np.atleast_2d(columns), rcond=rank_tol)
    if kernel.shape[1] == 0:
        raise IllConditioned("Columns are not linearly dependent")
    mu = kernel[:, 0] / np.abs(kernel[:, 0]).sum()
    return -mu if mu[np.argmax(np.abs(mu))] < 0 else mu


def split_signs(mu) -> Tuple[np.ndarray, np.ndarray]:
    """lambda_i = |mu_i| and e_i = sign(mu_i), with e_i = +1 where mu_i = 0."""
    mu = np.asarray(mu, dtype=float)
    signs = np.where(mu < 0, -1, 1)
    return np.abs(mu), signs


def affine_rank(points: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    lifted = np.vstack([points.T, np.ones(len(points))])
    singular = np.linalg.svd(lifted, compute_uv=False)
    if singular.size == 0 or singular[0] == 0.0:
        return -1
    return int(np.sum(singular > rank_tol * singular[0])) - 1


def caratheodory_reduce(points, lambdas, tol: float = 1e-9, rank_tol: float = RANK_TOL,
                        zero_tol: float = 1e-14) -> Tuple[np.ndarray, np.ndarray]:
    """
    Prune a zero-sum convex combination to an affinely independent support.

    Returns (indices, weights): the surviving rows of `points` and their
    weights, which are positive, sum to one and still combine to zero.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(lambdas, dtype=float)
    if len(weights) != len(points):
        raise ValueError("points and lambdas must have the same length")
    scale = max(1.0, float(np.linalg.norm(points, axis=1).max()))
    residual = float(np.linalg.norm(weights @ points))
    if weights.min() < -tol or abs(weights.sum() - 1.0) > tol or residual > tol * scale:
        raise CaratheodoryError(
            f"Input is not a zero convex combination (residual {residual:.3e}, weight sum {weights.sum():.15f})")

    support = np.flatnonzero(weights > 0)
    weights = weights[support]
    while len(support) > 1:
        lifted = np.vstack([points[support].T, np.ones(len(support))])
        kernel = scipy.linalg.null_space(lifted, rcond=rank_tol)
        if kernel.shape[1] == 0:
            break
        nu = kernel[:, 0]
        if nu.max() <= 0:
            nu = -nu
        ratios = np.full(len(nu), np.inf)
        positive = nu > 0
        ratios[positive] = weights[positive] / nu[positive]
        j = int(np.argmin(ratios))
        weights = weights - ratios[j] * nu
        weights[j] = 0.0
        keep = weights > zero_tol * weights.max()
        support, weights = support[keep], weights[keep]
        weights = weights / weights.sum()
    return support, weights
