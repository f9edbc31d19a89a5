# antipode/solvers/hull_certifier.py
"""
Origin-in-hull decisions with certificates on both sides.

`contains_origin` runs Wolfe's min-norm-point active-set procedure: an
inside verdict carries simplex weights, an outside verdict carries the
normalised min-norm point as a separating direction.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from antipode.config import Config
from antipode.exceptions import IterationLimit, NoFeasiblePoint
from antipode.geometry import Configuration, diameter
from antipode.logger import Logger
from antipode.maps import OddMapDescriptor, random_sphere_points

OPTIMALITY_EPS = 1e-12
WEIGHT_EPS = 1e-15


@dataclass
class HullVerdict:
    verdict: str
    min_norm_point: np.ndarray
    iterations: int
    lambdas: Optional[np.ndarray] = None
    separator: Optional[np.ndarray] = None
    margin: Optional[float] = None

    @property
    def inside(self) -> bool:
        return self.verdict == "inside"

    @property
    def gap(self) -> float:
        return float(np.linalg.norm(self.min_norm_point))

    def to_dict(self) -> dict:
        data = {"verdict": self.verdict, "iterations": self.iterations,
                "min_norm": self.gap}
        if self.inside:
            data["lambdas"] = self.lambdas.tolist()
        else:
            data["separator"] = self.separator.tolist()
            data["margin"] = self.margin
        return data


def _affine_minimizer(corral: np.ndarray) -> np.ndarray:
    """Weights summing to one of the min-norm point of the affine hull of the rows."""
    size = len(corral)
    system = np.zeros((size + 1, size + 1))
    system[0, 1:] = 1.0
    system[1:, 0] = 1.0
    system[1:, 1:] = corral @ corral.T
    rhs = np.zeros(size + 1)
    rhs[0] = 1.0
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return solution[1:]


def contains_origin(points, tol: float = 1e-9, max_iter: int = None) -> HullVerdict:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.size == 0:
        raise ValueError("contains_origin needs at least one point")
    if not np.all(np.isfinite(points)):
        raise ValueError("contains_origin needs finite coordinates")
    count, dim = points.shape
    scale = max(1.0, float(np.linalg.norm(points, axis=1).max()))
    threshold = tol * scale
    max_iter = max_iter or 50 * (count + dim) + 100

    corral = [int(np.argmin(np.einsum("ij,ij->i", points, points)))]
    weights = np.array([1.0])
    x = points[corral[0]].copy()
    iterations = 0
    while True:
        iterations += 1
        squared = float(x @ x)
        if math.sqrt(squared) <= threshold:
            break
        dots = points @ x
        j = int(np.argmin(dots))
        if squared - dots[j] <= OPTIMALITY_EPS * squared or j in corral:
            break
        if iterations > max_iter:
            raise IterationLimit(f"Min-norm point did not converge in {max_iter} iterations",
                                 gap=squared - float(dots[j]))
        corral.append(j)
        weights = np.append(weights, 0.0)
        while True:
            alpha = _affine_minimizer(points[corral])
            if alpha.min() > WEIGHT_EPS:
                weights = alpha
                break
            blocking = alpha <= WEIGHT_EPS
            drop = weights[blocking] - alpha[blocking]
            ratios = np.where(drop > 0, weights[blocking] / np.where(drop > 0, drop, 1.0), np.inf)
            step = min(1.0, float(ratios.min()))
            weights = weights + step * (alpha - weights)
            weights[np.flatnonzero(blocking)[np.argmin(ratios)]] = 0.0
            keep = weights > WEIGHT_EPS
            corral = [c for c, kept in zip(corral, keep) if kept]
            weights = weights[keep] / weights[keep].sum()
        if j not in corral:
            # the entering point was dropped at once: no further progress is possible
            x = weights @ points[corral]
            break
        x = weights @ points[corral]

    if math.sqrt(float(x @ x)) <= threshold:
        lambdas = np.zeros(count)
        lambdas[corral] = weights
        return HullVerdict("inside", x, iterations, lambdas=lambdas)

    separator = x / np.linalg.norm(x)
    margin = float((points @ separator).min())
    if margin <= 0.0:
        raise IterationLimit("Min-norm point stalled without a separating margin", gap=-margin)
    return HullVerdict("outside", x, iterations, separator=separator, margin=margin)


@dataclass
class SearchResult:
    configuration: Configuration
    diameter: float
    verdict: HullVerdict
    restart: int
    restarts: int


@dataclass
class AnnealState:
    """Current annealing configuration; energy is always priced at the current penalty."""
    points: np.ndarray
    values: np.ndarray
    verdict: HullVerdict
    penalty: float = 1.0

    @property
    def energy(self) -> float:
        return self.price(self.points, self.verdict)

    def price(self, points: np.ndarray, verdict: HullVerdict) -> float:
        return diameter(points) + self.penalty * verdict.gap

    def escalate(self, cap: float = 1e6):
        self.penalty = min(2.0 * self.penalty, cap)


class MinDiameterSearch:
    """
    Simulated annealing over finite subsets X of the domain sphere, minimising
    diameter(X) subject to 0 in conv f(X). Used to corroborate lower bounds,
    never to prove them.
    """

    def __init__(self, config: Config, logger: Logger):
        self.config = config
        self.logger = logger

    def _anneal(self, odd_map: OddMapDescriptor, cardinality: int, tol: float, steps: int,
                seed: int, restart: int):
        rng = np.random.default_rng([seed, restart])
        points = random_sphere_points(odd_map.domain_dim, cardinality, rng)
        points[1] = -points[0]
        values = odd_map.evaluate_many(points)
        state = AnnealState(points, values, contains_origin(values, tol))

        best = None
        temperatures = np.geomspace(0.1, 1e-4, steps)
        step_sizes = np.geomspace(0.5, 1e-3, steps)
        for step in range(steps + 1):
            if state.verdict.inside:
                tight = contains_origin(state.values, tol / 10)
                current = diameter(state.points)
                if tight.inside and (best is None or current < best[0]):
                    best = (current, state.points.copy(), tight)
            else:
                state.escalate()
            if step == steps:
                break

            i = int(rng.integers(cardinality))
            direction = rng.standard_normal(odd_map.domain_dim)
            direction -= (direction @ state.points[i]) * state.points[i]
            moved = state.points[i] + step_sizes[step] * direction
            candidate_points = state.points.copy()
            candidate_points[i] = moved / np.linalg.norm(moved)
            candidate_values = state.values.copy()
            candidate_values[i] = odd_map.evaluate_many(candidate_points[i])[0]
            candidate_verdict = contains_origin(candidate_values, tol)
            delta = state.price(candidate_points, candidate_verdict) - state.energy
            if delta <= 0 or rng.random() < math.exp(-delta / temperatures[step]):
                state.points, state.values, state.verdict = candidate_points, candidate_values, candidate_verdict
        return best

    def search(self, odd_map: OddMapDescriptor, cardinality: int = None, tol: float = None,
               restarts: int = None, seed: int = None, steps: int = None) -> SearchResult:
        cardinality = cardinality or odd_map.codomain_dim + 1
        tol = tol if tol is not None else self.config.hull_tol
        restarts = restarts or self.config.min_diameter_restarts
        seed = self.config.seed if seed is None else seed
        steps = steps or self.config.annealing_steps
        if cardinality < 2:
            raise ValueError("cardinality must be at least 2")

        self.logger.log_solve("min-diameter", "started",
                              f"map={odd_map.name}, cardinality={cardinality}, restarts={restarts}")
        indices = range(restarts)
        progress = dict(desc="Annealing restarts", total=restarts, disable=not self.config.progress)
        if self.config.threads > 1:
            with ThreadPoolExecutor(max_workers=self.config.threads) as pool:
                outcomes = list(tqdm(pool.map(
                    lambda r: self._anneal(odd_map, cardinality, tol, steps, seed, r), indices), **progress))
        else:
            outcomes = [self._anneal(odd_map, cardinality, tol, steps, seed, r) for r in tqdm(indices, **progress)]

        ranked: List = [(outcome[0], r, outcome) for r, outcome in enumerate(outcomes) if outcome is not None]
        if not ranked:
            raise NoFeasiblePoint(f"No feasible configuration found in {restarts} restarts")
        best_diameter, best_restart, (_, best_points, best_verdict) = min(ranked, key=lambda item: item[:2])
        self.logger.log_solve("min-diameter", "finished",
                              f"best diameter {best_diameter:.6f} from restart {best_restart}")
        return SearchResult(Configuration.from_array(best_points), best_diameter, best_verdict,
                            best_restart, restarts)


def min_diameter_search(odd_map: OddMapDescriptor, cardinality: int = None, tol: float = 1e-9,
                        restarts: int = 200, seed: int = 0, steps: int = None,
                        config: Config = None, logger: Logger = None) -> SearchResult:
    config = config or Config(progress=False)
    logger = logger or Logger()
    return MinDiameterSearch(config, logger).search(odd_map, cardinality, tol, restarts, seed, steps)
