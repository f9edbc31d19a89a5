# antipode/solvers/manifold_solver.py
"""
Zeros of sigma(g, mu) = sum_i mu_i f(g w_i) over a group of rotations times
the unit sphere of coefficients.

The group acts either through an involution-adapted embedding of SO(V_+)
into SO(R^n) (simplex problems) or diagonally on blocks of 2^r coordinates.
Searches are multi-start nonlinear least squares; the first start is always
g = identity with uniform mu.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares
from tqdm import tqdm

from antipode.config import Config
from antipode.exceptions import DimensionMismatch, IllConditioned, NoSignChange, NotConverged, VerificationFailed
from antipode.geometry import Configuration, as_array, regular_simplex, simplex_tensor_points
from antipode.logger import Logger
from antipode.maps import OddMapDescriptor, with_codomain
from antipode.solvers.certificate import ConvexCertificate, build_certificate, verify_certificate
from antipode.solvers.circle_solver import CircleSolver
from antipode.solvers.hull_certifier import contains_origin
from antipode.solvers.linalg import caratheodory_reduce, dependence_coefficients, kernel_direction, split_signs


def group_param_count(r: int) -> int:
    if r < 0:
        raise ValueError(f"r must be nonnegative, got {r}")
    if r <= 1:
        return r
    if r == 2:
        return 4
    size = 2 ** r
    return size * (size - 1) // 2


def _quaternion_matrix(q: np.ndarray) -> np.ndarray:
    """Left multiplication by the quaternion a + bi + cj + dk on R^4."""
    a, b, c, d = q
    return np.array([[a, -b, -c, -d],
                     [b, a, -d, c],
                     [c, d, a, -b],
                     [d, -c, b, a]])


@dataclass(frozen=True, eq=False)
class GroupElement:
    """
    Element of SO(2^r): an angle for r = 1, a unit quaternion for r = 2 and
    skew-symmetric coordinates through the exponential map for r >= 3. `sign`
    multiplies the exponential so that -g stays representable.
    """
    r: int
    params: np.ndarray
    sign: int = 1

    @classmethod
    def from_params(cls, r: int, params, sign: int = 1) -> "GroupElement":
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.size != group_param_count(r):
            raise ValueError(f"SO(2^{r}) takes {group_param_count(r)} parameters, got {params.size}")
        if r == 2:
            norm = np.linalg.norm(params)
            if norm == 0.0:
                raise ValueError("The zero quaternion is not a rotation")
            params = params / norm
        return cls(r, params, sign)

    @classmethod
    def identity(cls, r: int) -> "GroupElement":
        params = np.zeros(group_param_count(r))
        if r == 2:
            params[0] = 1.0
        return cls(r, params)

    @property
    def size(self) -> int:
        return 2 ** self.r

    @cached_property
    def matrix(self) -> np.ndarray:
        if self.r == 0:
            return np.ones((1, 1))
        if self.r == 1:
            c, s = math.cos(self.params[0]), math.sin(self.params[0])
            return np.array([[c, -s], [s, c]])
        if self.r == 2:
            return _quaternion_matrix(self.params)
        skew = np.zeros((self.size, self.size))
        skew[np.triu_indices(self.size, k=1)] = self.params
        return self.sign * scipy.linalg.expm(skew - skew.T)

    def negated(self) -> "GroupElement":
        if self.r == 0:
            raise ValueError("SO(1) does not contain -1")
        if self.r == 1:
            return GroupElement(1, self.params + math.pi)
        if self.r == 2:
            return GroupElement(2, -self.params)
        return GroupElement(self.r, self.params, -self.sign)

    def orthogonality_error(self) -> float:
        m = self.matrix
        return max(float(np.abs(m.T @ m - np.eye(self.size)).max()), abs(float(np.linalg.det(m)) - 1.0))

    def to_dict(self) -> dict:
        return {"r": self.r, "params": self.params.tolist(), "sign": self.sign}


@dataclass
class SimplexProblem:
    n: int
    r: int
    s: int
    vertices: np.ndarray
    permutation: np.ndarray
    tau: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray

    @property
    def codomain_dim(self) -> int:
        return self.n + 2 ** self.r - 1

    def embed(self, g: GroupElement) -> np.ndarray:
        """(g, 1) acting as g on V_+ and as the identity on V_-."""
        if g.size != self.v_plus.shape[1]:
            raise DimensionMismatch(f"V_+ has dimension {self.v_plus.shape[1]}, g acts on R^{g.size}")
        return self.v_plus @ g.matrix @ self.v_plus.T + self.v_minus @ self.v_minus.T

    def transform(self, mu) -> np.ndarray:
        """(T mu)_i = mu_{tau(i)}."""
        return np.asarray(mu, dtype=float)[self.permutation]


def build_simplex_problem(n: int) -> SimplexProblem:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    r = n.bit_length() - 1
    s = n - 2 ** r
    vertices = as_array(regular_simplex(n))

    permutation = np.arange(n + 1)
    permutation[:s] = np.arange(s, 2 * s)
    permutation[s:2 * s] = np.arange(s)
    tau = n / (n + 1) * vertices[permutation].T @ vertices

    plus = [vertices[i] + vertices[i + s] for i in range(s)] + [vertices[i] for i in range(2 * s, n + 1)]
    v_plus = scipy.linalg.orth(np.array(plus).T)
    if s:
        v_minus = scipy.linalg.orth(np.array([vertices[i] - vertices[i + s] for i in range(s)]).T)
    else:
        v_minus = np.zeros((n, 0))
    return SimplexProblem(n, r, s, vertices, permutation, tau, v_plus, v_minus)


def diagonal_action(g, dim: int) -> np.ndarray:
    matrix = g.matrix if isinstance(g, GroupElement) else np.asarray(g, dtype=float)
    block = matrix.shape[0]
    if dim % block:
        raise DimensionMismatch(f"R^{dim} does not split into blocks of R^{block}")
    return np.kron(np.eye(dim // block), matrix)


def sigma(odd_map: OddMapDescriptor, g, w_points, mu, problem: SimplexProblem = None) -> np.ndarray:
    w = as_array(w_points)
    mu = np.asarray(mu, dtype=float)
    if len(mu) != len(w):
        raise DimensionMismatch(f"{len(mu)} coefficients for {len(w)} points")
    if problem is not None:
        matrix = problem.embed(g)
    else:
        matrix = diagonal_action(g, w.shape[1])
    return mu @ odd_map.evaluate_many(w @ matrix.T)


@dataclass
class RestartOutcome:
    restart: int
    group: GroupElement
    mu: np.ndarray
    residual: float
    evaluations: int
    converged: bool = False


@dataclass
class SearchProblem:
    odd_map: OddMapDescriptor
    points: np.ndarray
    r: int
    embed: Callable[[GroupElement], np.ndarray]
    tol: float
    solver: str
    outcomes: List[RestartOutcome] = field(default_factory=list)

    def evaluate(self, group: GroupElement, mu: np.ndarray) -> np.ndarray:
        return mu @ self.odd_map.evaluate_many(self.points @ self.embed(group).T)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        count = group_param_count(self.r)
        params, mu = x[:count], x[count:]
        extra = [mu @ mu - 1.0]
        if self.r == 2:
            extra.append(params @ params - 1.0)
        group = GroupElement.from_params(self.r, params)
        return np.concatenate([self.evaluate(group, mu), extra])

    def outcome(self, x: np.ndarray, restart: int, evaluations: int) -> RestartOutcome:
        count = group_param_count(self.r)
        group = GroupElement.from_params(self.r, x[:count])
        mu = x[count:] / np.linalg.norm(x[count:])
        if mu[np.argmax(np.abs(mu))] < 0:
            mu = -mu
        residual = float(np.linalg.norm(self.evaluate(group, mu)) / np.abs(mu).sum())
        return RestartOutcome(restart, group, mu, residual, evaluations, residual <= self.tol)


class ManifoldSolver:
    def __init__(self, config: Config, logger: Logger):
        self.config = config
        self.logger = logger
        self.circle = CircleSolver(config, logger)

    # Search

    def _start(self, r: int, count: int, seed: int, restart: int) -> np.ndarray:
        if restart == 0:
            return np.concatenate([GroupElement.identity(r).params, np.full(count, 1.0 / math.sqrt(count))])
        rng = np.random.default_rng([seed, restart])
        if r == 1:
            params = rng.uniform(0.0, 2.0 * math.pi, 1)
        elif r == 2:
            params = rng.standard_normal(4)
            params /= np.linalg.norm(params)
        else:
            params = 0.5 * rng.standard_normal(group_param_count(r))
        mu = rng.standard_normal(count)
        return np.concatenate([params, mu / np.linalg.norm(mu)])

    def _run_restart(self, problem: SearchProblem, seed: int, restart: int) -> RestartOutcome:
        x0 = self._start(problem.r, len(problem.points), seed, restart)
        start = problem.outcome(x0, restart, 1)
        if start.converged:
            return start
        fit = least_squares(problem.residuals, x0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=self.config.max_evals)
        return problem.outcome(fit.x, restart, int(fit.nfev))

    def _search(self, problem: SearchProblem, restarts: int, seed: int) -> RestartOutcome:
        batch = self.config.threads
        progress = tqdm(total=restarts, desc=f"{problem.solver} restarts", disable=not self.config.progress)
        with ThreadPoolExecutor(max_workers=batch) as pool:
            for first in range(0, restarts, batch):
                indices = range(first, min(first + batch, restarts))
                if batch > 1:
                    outcomes = list(pool.map(lambda i: self._run_restart(problem, seed, i), indices))
                else:
                    outcomes = [self._run_restart(problem, seed, i) for i in indices]
                for outcome in outcomes:
                    self.logger.log_restart(problem.solver, outcome.restart, outcome.residual, outcome.converged)
                problem.outcomes.extend(outcomes)
                progress.update(len(outcomes))
                if any(outcome.converged for outcome in outcomes):
                    break
        progress.close()
        return min(problem.outcomes, key=lambda outcome: (outcome.residual, outcome.restart))

    def _certify(self, odd_map: OddMapDescriptor, points: np.ndarray, mu: np.ndarray, base: dict,
                 bound: Optional[float], seed: Optional[int], tol: float, solver: str,
                 flags: List[str] = None, verify: bool = True) -> ConvexCertificate:
        lambdas, signs = split_signs(mu / np.abs(mu).sum())
        tolerances = {**self.config.tolerances(), "residual_tol": tol}
        cert = build_certificate(odd_map, base, Configuration.from_array(points, signs), lambdas,
                                 tolerances, bound=bound, seed=seed, flags=flags)
        if not verify:
            return cert
        cert.hull = contains_origin(cert.mapped_points(), self.config.hull_tol).to_dict()
        report = verify_certificate(cert)
        if not report.passed:
            self.logger.log_solve(solver, "FAILED", "; ".join(report.failures))
            raise VerificationFailed("Certificate failed verification", report)
        self.logger.log_solve(solver, "certified", f"residual={cert.residual:.3e}, diameter={cert.diameter:.6f}")
        return cert

    def _search_certificate(self, problem: SearchProblem, restarts: int, seed: int, base: dict,
                            bound: float) -> ConvexCertificate:
        best = self._search(problem, restarts, seed)
        moved = problem.points @ problem.embed(best.group).T
        base = {**base, "group": best.group.to_dict(), "restart": best.restart}
        if not best.converged:
            cert = self._certify(problem.odd_map, moved, best.mu, base, bound, seed, problem.tol,
                                 problem.solver, verify=False)
            self.logger.log_solve(problem.solver, "not converged",
                                  f"best residual {best.residual:.3e} after {len(problem.outcomes)} restarts")
            raise NotConverged(f"Best residual {best.residual:.3e} above {problem.tol:.1e} after "
                               f"{len(problem.outcomes)} restarts; raise --restarts", best=cert)
        return self._certify(problem.odd_map, moved, best.mu, base, bound, seed, problem.tol, problem.solver)

    # Routes

    def solve_simplex_theorem(self, odd_map: OddMapDescriptor, restarts: int = None, tol: float = None,
                              seed: int = None) -> ConvexCertificate:
        """
        Signs e_i, weights and g in SO(V_+) with sum lambda_i f(e_i (g,1) v_i) = 0
        over the regular simplex v_0..v_n of S^{n-1}.
        """
        n = odd_map.domain_dim
        simplex = build_simplex_problem(n)
        if odd_map.codomain_dim != simplex.codomain_dim:
            raise DimensionMismatch(f"Maps on S^{n - 1} need codomain R^{simplex.codomain_dim}, "
                                    f"got R^{odd_map.codomain_dim}")
        restarts = restarts or self.config.restarts
        tol = tol if tol is not None else self.config.residual_tol
        seed = self.config.seed if seed is None else seed
        self.circle.audit(odd_map)

        self.logger.log_solve("simplex", "started", f"map={odd_map.name}, n={n}, r={simplex.r}, s={simplex.s}")
        problem = SearchProblem(odd_map, simplex.vertices, simplex.r, simplex.embed, tol, "simplex")
        return self._search_certificate(problem, restarts, seed, {"r": simplex.r, "s": simplex.s},
                                        math.pi - math.acos(1.0 / n))

    def solve_lemma_gen(self, odd_map: OddMapDescriptor, w_points, r: int = None, restarts: int = None,
                        tol: float = None, seed: int = None) -> ConvexCertificate:
        """
        2^r k + 1 points of S(R^{2^r n}), map into R^{2^r k + 2^r - 1}; SO(2^r)
        acts diagonally on blocks of 2^r coordinates.
        """
        w = as_array(w_points)
        block = odd_map.codomain_dim - len(w) + 2
        if block < 1 or block & (block - 1):
            raise DimensionMismatch(f"{len(w)} points and codomain R^{odd_map.codomain_dim} match no r")
        inferred = block.bit_length() - 1
        if r is not None and r != inferred:
            raise DimensionMismatch(f"{len(w)} points and codomain R^{odd_map.codomain_dim} need r={inferred}")
        r = inferred
        if w.shape[1] != odd_map.domain_dim or odd_map.domain_dim % block:
            raise DimensionMismatch(f"Domain R^{odd_map.domain_dim} must be (R^{block})^n and hold the points")
        restarts = restarts or self.config.restarts
        tol = tol if tol is not None else self.config.residual_tol
        seed = self.config.seed if seed is None else seed

        gram = np.abs(w @ w.T)
        np.fill_diagonal(gram, 0.0)
        bound = math.pi - math.acos(min(1.0, float(gram.max())))
        solver = f"lemma-r{r}"
        self.logger.log_solve(solver, "started", f"map={odd_map.name}, points={len(w)}")

        if r == 0:
            return self._kernel_certificate(odd_map, w, bound, seed, tol, solver)
        if r == 1:
            try:
                cert = self.circle.solve_lemma(odd_map, w, bound=bound, seed=seed, solver=solver)
                cert.base = {"r": 1, **cert.base}
                return cert
            except NoSignChange as e:
                self.logger.warning(f"{e}; falling back to the group search")
        self.circle.audit(odd_map)
        problem = SearchProblem(odd_map, w, r, lambda g: diagonal_action(g, w.shape[1]), tol, solver)
        return self._search_certificate(problem, restarts, seed, {"r": r}, bound)

    def _kernel_certificate(self, odd_map: OddMapDescriptor, w: np.ndarray, bound: float, seed: int,
                            tol: float, solver: str) -> ConvexCertificate:
        self.circle.audit(odd_map)
        columns = odd_map.evaluate_many(w).T
        flags = []
        try:
            mu = dependence_coefficients(columns)
        except IllConditioned as e:
            self.logger.warning(f"{e}; taking the first kernel basis vector")
            mu = kernel_direction(columns)
            flags.append("ambiguous-kernel")
        return self._certify(odd_map, w, mu, {"r": 0}, bound, seed, tol, solver, flags)

    def solve_padded_simplex(self, odd_map: OddMapDescriptor, restarts: int = None, tol: float = None,
                             seed: int = None) -> ConvexCertificate:
        """
        Map S^{n-1} -> R^{m+n-1} with m <= 2^r: pad into R^{n+2^r-1}, solve on
        the simplex, then prune the witness set to at most m+n points.
        """
        n = odd_map.domain_dim
        simplex = build_simplex_problem(n)
        m = odd_map.codomain_dim - n + 1
        if not 1 <= m <= 2 ** simplex.r:
            raise ValueError(f"Need 1 <= m <= 2^{simplex.r} for n={n}, got m={m}")
        tol = tol if tol is not None else self.config.residual_tol
        cert = self.solve_simplex_theorem(with_codomain(odd_map, simplex.codomain_dim), restarts, tol, seed)

        support, weights = caratheodory_reduce(cert.mapped_points(), cert.lambdas,
                                               tol=max(tol, self.config.hull_tol))
        points = np.array([cert.points.points[i].coords for i in support])
        mu = weights * np.asarray(cert.signs)[support]
        reduced = self._certify(odd_map, points, mu, {**cert.base, "support": support.tolist()},
                                cert.bound, cert.seed, tol, "padded-simplex", flags=cert.flags + ["reduced"])
        if len(reduced.points) > m + n:
            raise ValueError(f"Reduced witness set has {len(reduced.points)} > m+n = {m + n} points")
        return reduced

    def solve_fixed_configuration(self, odd_map: OddMapDescriptor, seed: int = None) -> ConvexCertificate:
        """
        Witness set drawn from the fixed m+n points u_i (x) e_j and the tail
        basis, q = n // m; diameter at most pi - arccos(1/q).
        """
        n = odd_map.domain_dim
        m = odd_map.codomain_dim - n + 1
        if not 1 <= m <= n:
            raise ValueError(f"Need 1 <= m <= n, got m={m}, n={n}")
        seed = self.config.seed if seed is None else seed
        q = n // m
        w = as_array(simplex_tensor_points(m, n))
        self.logger.log_solve("fixed-configuration", "started", f"map={odd_map.name}, m={m}, q={q}")
        return self._kernel_certificate(odd_map, w, math.pi - math.acos(1.0 / q), seed,
                                        self.config.residual_tol, "fixed-configuration")
