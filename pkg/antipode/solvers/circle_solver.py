# antipode/solvers/circle_solver.py
"""
Zero of the determinant map on the circle and the resulting witness sets.

For 2k+1 points w_j and a circle action z.w, phi(theta) is the determinant of
the matrix with columns f(e^{i theta} w_j). Oddness of f gives
phi(theta + pi) = -phi(theta), so a sign change exists on [0, pi].
"""
import math
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np
from scipy.optimize import brentq

from antipode.config import Config
from antipode.exceptions import (DegenerateSquares, DimensionMismatch, IllConditioned,
                                 NoSignChange, VerificationFailed)
from antipode.geometry import (Configuration, SpherePoint, as_array, roots_of_unity_points,
                               rotate, to_complex)
from antipode.logger import Logger
from antipode.maps import OddMapDescriptor, oddness_audit, with_codomain
from antipode.solvers.certificate import ConvexCertificate, build_certificate, verify_certificate
from antipode.solvers.hull_certifier import contains_origin
from antipode.solvers.linalg import RANK_TOL, dependence_coefficients, kernel_direction, split_signs

CircleAction = Callable[[np.ndarray, float], np.ndarray]


def rotate_plane(coords, theta: float) -> np.ndarray:
    """Rotation of the first coordinate plane only, identity elsewhere."""
    coords = np.array(coords, dtype=float)
    c, s = math.cos(theta), math.sin(theta)
    x, y = coords[..., 0].copy(), coords[..., 1].copy()
    coords[..., 0] = c * x - s * y
    coords[..., 1] = s * x + c * y
    return coords


def _check_problem(odd_map: OddMapDescriptor, w: np.ndarray):
    if w.shape[1] != odd_map.domain_dim:
        raise DimensionMismatch(
            f"Points live in R^{w.shape[1]} but the map is defined on S^{odd_map.domain_dim - 1}")
    if odd_map.codomain_dim != len(w):
        raise DimensionMismatch(
            f"The determinant map needs {odd_map.codomain_dim} points, got {len(w)}")


def circle_columns(odd_map: OddMapDescriptor, w_points, theta: float, action: CircleAction = rotate) -> np.ndarray:
    w = as_array(w_points)
    return odd_map.evaluate_many(action(w, theta)).T


def phi(odd_map: OddMapDescriptor, w_points, theta: float, action: CircleAction = rotate) -> float:
    w = as_array(w_points)
    _check_problem(odd_map, w)
    return float(np.linalg.det(circle_columns(odd_map, w, theta, action)))


@dataclass
class CircleZero:
    theta: float
    value: float
    scale: float
    degenerate: bool = False
    flags: List[str] = field(default_factory=list)


def find_circle_zero(odd_map: OddMapDescriptor, w_points, grid_size: int = None, tol: float = 1e-10,
                     degenerate_tol: float = 1e-12, width: float = 1e-13, max_refinements: int = 3,
                     rank_tol: float = RANK_TOL, action: CircleAction = rotate) -> CircleZero:
    """
    First zero of phi on [0, pi].

    phi counts as identically zero only when two tests agree on every grid
    angle: |phi| is negligible against the Hadamard bound prod_j |column_j|,
    and the columns are numerically rank deficient (s_min <= rank_tol * s_max).
    A small determinant alone does not qualify.
    """
    w = as_array(w_points)
    _check_problem(odd_map, w)
    size = len(w)
    grid_size = grid_size or max(64, 16 * size)

    def value(theta):
        return float(np.linalg.det(circle_columns(odd_map, w, theta, action)))

    for _ in range(max_refinements + 1):
        grid = np.linspace(0.0, math.pi, grid_size + 1)
        values = np.empty(grid.size)
        hadamard_ratio, rank_ratio = 0.0, 0.0
        for i, theta in enumerate(grid):
            columns = circle_columns(odd_map, w, theta, action)
            values[i] = np.linalg.det(columns)
            hadamard = float(np.prod(np.linalg.norm(columns, axis=0)))
            hadamard_ratio = max(hadamard_ratio, abs(values[i]) / hadamard if hadamard > 0 else 0.0)
            singular = np.linalg.svd(columns, compute_uv=False)
            rank_ratio = max(rank_ratio, singular[-1] / singular[0] if singular[0] > 0 else 0.0)
        scale = float(np.abs(values).max())
        if hadamard_ratio <= degenerate_tol and rank_ratio <= rank_tol:
            return CircleZero(0.0, float(values[0]), scale, degenerate=True, flags=["degenerate"])

        exact = np.flatnonzero(values[:-1] == 0.0)
        changes = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
        if exact.size and (not changes.size or exact[0] <= changes[0]):
            theta = float(grid[exact[0]])
            return CircleZero(theta, 0.0, scale)
        if changes.size:
            i = int(changes[0])
            theta = brentq(value, grid[i], grid[i + 1], xtol=width)
            return CircleZero(float(theta), value(theta), scale)
        grid_size *= 4

    # tangential zeros: probe the smallest |phi| on the finest grid
    i = int(np.argmin(np.abs(values[:-1])))
    if abs(values[i]) <= tol * scale:
        return CircleZero(float(grid[i]), float(values[i]), scale, flags=["min-probe"])
    raise NoSignChange(f"No sign change of the determinant map on a grid of {grid_size // 4} angles")


def delta_invariant_check(w_points, lambdas) -> float:
    """
    Relative spread of lambda_i delta_i, delta_i = prod_{j != i}(w_i/w_j - w_j/w_i),
    for a zero combination of the odd-polynomial evaluation map.
    """
    w = to_complex(as_array(w_points))[:, 0]
    lambdas = np.asarray(lambdas, dtype=float)
    squares = w * w
    gaps = np.abs(squares[:, None] - squares[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() < 1e-8:
        raise DegenerateSquares(f"Squares of the points nearly coincide (gap {gaps.min():.3e})")
    deltas = []
    for i in range(len(w)):
        others = np.delete(w, i)
        deltas.append(np.prod(w[i] * np.conj(others) - np.conj(w[i]) * others))
    deltas = np.array(deltas)
    if np.any(np.abs(deltas.imag) > 1e-10 * np.maximum(1.0, np.abs(deltas))):
        raise ValueError("delta_i should be real for points on the unit circle")
    products = lambdas * deltas.real
    mean = products.mean()
    return float(np.abs(products - mean).max() / abs(mean))


class CircleSolver:
    def __init__(self, config: Config, logger: Logger):
        self.config = config
        self.logger = logger

    def find_zero(self, odd_map: OddMapDescriptor, w_points, action: CircleAction = rotate) -> CircleZero:
        return find_circle_zero(
            odd_map, w_points,
            grid_size=max(self.config.grid_min, self.config.grid_per_point * len(w_points)),
            degenerate_tol=self.config.degenerate_tol, width=self.config.bisection_width,
            max_refinements=self.config.max_grid_refinements, action=action)

    def audit(self, odd_map: OddMapDescriptor):
        residual = oddness_audit(odd_map, self.config.oddness_samples, self.config.seed)
        if residual > self.config.oddness_tol:
            raise ValueError(f"Map {odd_map.name} fails the oddness audit (residual {residual:.3e})")

    def solve_lemma(self, odd_map: OddMapDescriptor, w_points: Sequence[SpherePoint], bound: float = None,
                    seed: int = None, action: CircleAction = rotate, solver: str = "circle") -> ConvexCertificate:
        """
        Signs e_i, weights lambda_i and an angle theta with
        sum lambda_i f(e_i e^{i theta} w_i) = 0, for 2k+1 points w_i.
        """
        self.audit(odd_map)
        w = as_array(w_points)
        zero = self.find_zero(odd_map, w, action)
        if zero.degenerate:
            self.logger.log_solve(solver, "degenerate", "determinant map vanishes identically, using theta = 0")

        rotated = action(w, zero.theta)
        columns = odd_map.evaluate_many(rotated).T
        flags = list(zero.flags)
        try:
            mu = dependence_coefficients(columns)
        except IllConditioned as e:
            self.logger.warning(f"{e}; taking the first kernel basis vector")
            mu = kernel_direction(columns)
            flags.append("ambiguous-kernel")
        lambdas, signs = split_signs(mu)

        points = Configuration.from_array(rotated, signs)
        cert = build_certificate(odd_map, {"theta": zero.theta}, points, lambdas,
                                 self.config.tolerances(), bound=bound, seed=seed, flags=flags)
        cert.hull = contains_origin(cert.mapped_points(), self.config.hull_tol).to_dict()

        report = verify_certificate(cert)
        if not report.passed:
            self.logger.log_solve(solver, "FAILED", "; ".join(report.failures))
            raise VerificationFailed("Certificate failed verification", report)
        self.logger.log_solve(solver, "certified",
                              f"theta={zero.theta:.12f}, residual={cert.residual:.3e}, diameter={cert.diameter:.6f}")
        return cert

    def solve_theorem_1(self, odd_map: OddMapDescriptor, z: SpherePoint = None, seed: int = None) -> ConvexCertificate:
        if odd_map.domain_dim != 2:
            raise DimensionMismatch("Roots-of-unity witnesses need a map defined on the circle S(C)")
        d = odd_map.codomain_dim
        if d < 3 or d % 2 == 0:
            raise DimensionMismatch(f"The circle route needs codomain R^(2k+1), k >= 1, got R^{d}")
        k = (d - 1) // 2
        self.logger.log_solve("roots-of-unity", "started", f"map={odd_map.name}, k={k}")
        cert = self.solve_lemma(odd_map, roots_of_unity_points(k, z),
                                bound=math.pi - math.pi / (2 * k + 1), seed=seed, solver="roots-of-unity")
        if odd_map.kind == "poly-eval":
            cert.reports["delta_invariant"] = delta_invariant_check(cert.points.signed_coords(), cert.lambdas)
        return cert

    def solve_planar_restriction(self, odd_map: OddMapDescriptor, seed: int = None) -> ConvexCertificate:
        """
        Restrict an odd map on S(R^n) to the first coordinate circle and pad
        its codomain to R^(2k+1), k >= 1 smallest with m+n-1 <= 2k+1.
        """
        n, d = odd_map.domain_dim, odd_map.codomain_dim
        k = max(1, math.ceil((d - 1) / 2))
        padded = with_codomain(odd_map, 2 * k + 1)
        circle = as_array(roots_of_unity_points(k))
        w = np.hstack([circle, np.zeros((len(circle), n - 2))])
        self.logger.log_solve("planar", "started", f"map={odd_map.name}, k={k}")
        return self.solve_lemma(padded, w, bound=math.pi - math.pi / (2 * k + 1), seed=seed,
                                action=rotate_plane, solver="planar")
