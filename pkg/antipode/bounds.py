# antipode/bounds.py
"""
Bounds on delta(m, n), the smallest delta such that every odd map
S^{n-1} -> R^{m+n-1} has a witness set of diameter <= pi - arccos(delta).

Sources are named after the construction that yields them:

    rigidity            1/n <= delta, any zero convex combination on S^{n-1}
    circle-extremal     odd polynomial evaluation on S(C), lower bound for n = 2
    simplex-theorem     regular simplex moved by SO(V_+), 1/n when m <= 2^r
    circle              roots of unity in a coordinate circle, cos(pi/(2k+1))
    simplex-tensor      fixed points u_i (x) e_j, 1/floor(n/m)
    multiindex(r,l)     roots of unity on r coordinates of S(C^{n//2})
    tensor-power(l)     symmetric odd power map, lower bound 1/k^{1/(2l+1)}
"""
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from antipode.config import Config
from antipode.exceptions import NoFeasiblePoint, TensorCapExceeded
from antipode.geometry import lattice_count, lattice_points, lattice_preimages, multiindex_bound
from antipode.logger import Logger
from antipode.maps import make_random_trig, make_tensor_power
from antipode.solvers.hull_certifier import MinDiameterSearch
from antipode.solvers.manifold_solver import ManifoldSolver

EXACT_TOL = 1e-15
MULTIINDEX_MAX_L = 64
CORROBORATION_SLACK = 1e-3
CSV_FIELDS = ("m", "n", "lower", "upper", "exact", "lower_source", "upper_source")


@dataclass
class BoundRecord:
    m: int
    n: int
    lower: float
    upper: float
    lower_source: str
    upper_source: str
    exact: bool = False
    strict: bool = False

    def to_row(self) -> dict:
        return {name: getattr(self, name) for name in CSV_FIELDS}

    def to_dict(self) -> dict:
        return asdict(self)


def circle_k(m: int, n: int) -> int:
    """Smallest k >= 1 with m + n - 1 <= 2k + 1."""
    return max(1, math.ceil((m + n - 2) / 2))


def multiindex_upper(m: int, n: int):
    """Best (bound, r, l) over multiindex configurations with enough points, or None."""
    complex_dim = n // 2
    needed = 2 * circle_k(m, n) + 1
    best = None
    for r in range(1, complex_dim + 1):
        for l in range(1, MULTIINDEX_MAX_L + 1):
            if (2 * l + 1) ** r * math.comb(complex_dim, r) < needed:
                continue
            candidate = (multiindex_bound(r, l), r, l)
            if best is None or candidate[0] < best[0]:
                best = candidate
            break
    return best


def tensor_lower(m: int, n: int):
    """
    Best (bound, l) from symmetric power maps: the power map of order 2l+1 is
    an odd map into R^k, k = C(n+2l, n-1), and delta is non-decreasing in m.
    """
    best = None
    l = 1
    while True:
        k = math.comb(n + 2 * l, n - 1)
        if k - n + 1 > m:
            return best
        candidate = (k ** (-1.0 / (2 * l + 1)), l)
        if best is None or candidate[0] > best[0]:
            best = candidate
        l += 1


def _first_within_tol(candidates, extreme):
    """The extreme value, credited to the first source within EXACT_TOL of it."""
    target = extreme(value for value, _ in candidates)
    return target, next(source for value, source in candidates if abs(value - target) <= EXACT_TOL)


def best_bounds(m: int, n: int) -> BoundRecord:
    if m < 1 or n < 2:
        raise ValueError(f"delta(m, n) is defined for m >= 1 and n >= 2, got ({m}, {n})")

    lowers = [(1.0 / n, "rigidity")]
    k = circle_k(m, n)
    if n == 2:
        lowers.append((math.cos(math.pi / (2 * k + 1)), "circle-extremal"))

    uppers = []
    r = n.bit_length() - 1
    if m <= 2 ** r:
        uppers.append((1.0 / n, "simplex-theorem"))
    uppers.append((math.cos(math.pi / (2 * k + 1)), "circle"))
    if m <= n and n // m > 1:
        uppers.append((1.0 / (n // m), "simplex-tensor"))
    multiindex = multiindex_upper(m, n)
    if multiindex is not None:
        value, mr, ml = multiindex
        uppers.append((value, f"multiindex(r={mr},l={ml})"))
    tensor = tensor_lower(m, n)
    if tensor is not None:
        value, tl = tensor
        lowers.append((value, f"tensor-power(l={tl})"))

    # first source wins ties
    lower, lower_source = _first_within_tol(lowers, max)
    upper, upper_source = _first_within_tol(uppers, min)
    exact = abs(upper - lower) <= EXACT_TOL
    if exact:
        lower = upper
    if not 1.0 / n <= lower <= upper < 1.0:
        raise ValueError(f"Inconsistent bounds for ({m}, {n}): lower {lower!r}, upper {upper!r}")
    strict = m == n + 1 and n % 2 == 0 and lower_source == "rigidity"
    return BoundRecord(m, n, lower, upper, lower_source, upper_source, exact, strict)


def monotonicity_violations(records: Sequence[BoundRecord]) -> List[str]:
    """Pairs (m < m', same n) where both values are exact and delta decreases."""
    by_n: Dict[int, List[BoundRecord]] = {}
    for record in records:
        if record.exact:
            by_n.setdefault(record.n, []).append(record)
    violations = []
    for n, exact in by_n.items():
        exact.sort(key=lambda record: record.m)
        for left, right in zip(exact, exact[1:]):
            if right.upper < left.upper - EXACT_TOL:
                violations.append(f"delta({right.m},{n}) = {right.upper!r} < delta({left.m},{n}) = {left.upper!r}")
    return violations


def atlas_table(m_max: int, n_max: int, progress: bool = False) -> List[BoundRecord]:
    """
    Records for the first `m_max` values of m (1..m_max) and the first `n_max`
    admissible values of n (2..n_max+1).
    """
    if m_max < 1 or n_max < 1:
        raise ValueError("Table sizes must be positive")
    pairs = [(m, n) for m in range(1, m_max + 1) for n in range(2, n_max + 2)]
    records = [best_bounds(m, n) for m, n in tqdm(pairs, desc="Bounds", disable=not progress)]
    violations = monotonicity_violations(records)
    if violations:
        raise ValueError("Monotonicity in m violated: " + "; ".join(violations))
    return records


def records_to_csv(records: Sequence[BoundRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for record in records:
        writer.writerow(record.to_row())
    return buffer.getvalue()


def records_to_json(records: Sequence[BoundRecord]) -> str:
    return json.dumps([record.to_dict() for record in records], indent=2)


@dataclass
class CorroborationReport:
    kind: str
    parameters: dict
    passed: Optional[bool]
    measured: Optional[float] = None
    bound: Optional[float] = None
    details: dict = field(default_factory=dict)
    label: str = "corroboration"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AsymptoticRow:
    l: int
    m: int
    gap: float
    scaled: float
    power_m: int
    power_gap: float
    power_scaled: float


@dataclass
class AsymptoticReport:
    n: int
    alpha: float
    rows: List[AsymptoticRow]
    trend: str
    label: str = "corroboration"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["l", "m", "one_minus_delta", "m_alpha_gap", "power_m", "power_one_minus_delta",
                         "power_m_alpha_gap"])
        for row in self.rows:
            writer.writerow([row.l, row.m, row.gap, row.scaled, row.power_m, row.power_gap, row.power_scaled])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return asdict(self)


def describe_trend(values: Sequence[float]) -> str:
    steps = np.diff(np.asarray(values, dtype=float))
    if steps.size == 0:
        return "single row"
    if np.all(steps < 0):
        return "strictly decreasing"
    rising = np.flatnonzero(steps >= 0)
    if rising[-1] + 1 < steps.size:
        return f"decreasing from row {rising[-1] + 1}"
    return "not decreasing"


def asymptotic_table(n: int, l_list: Sequence[int], alpha: float) -> AsymptoticReport:
    """
    1 - delta along the symmetric power maps (m = C(n+2l, n-1) - n + 1) and
    along m = (2l+1)^{n-1}, with m^alpha (1 - delta) beside each.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not alpha < 1.0 / (n - 1):
        raise ValueError(f"alpha must be below 1/(n-1) = {1.0 / (n - 1)}, got {alpha}")
    rows = []
    for l in l_list:
        if l < 1:
            raise ValueError(f"l must be positive, got {l}")
        k = math.comb(n + 2 * l, n - 1)
        m = k - n + 1
        gap = 1.0 - k ** (-1.0 / (2 * l + 1))
        power_m = (2 * l + 1) ** (n - 1)
        power_gap = 1.0 - (2 * l + 1) ** (-(n - 1) / (2 * l + 1))
        rows.append(AsymptoticRow(l, m, gap, m ** alpha * gap, power_m, power_gap, power_m ** alpha * power_gap))
    return AsymptoticReport(n, alpha, rows, describe_trend([row.scaled for row in rows]))


class Corroborator:
    """Desk-scale experiments backing the asymptotic bounds. They corroborate; they prove nothing."""

    def __init__(self, config: Config, logger: Logger):
        self.config = config
        self.logger = logger

    def corroborate_vi(self, n: int, l: int, restarts: int = None, seed: int = None) -> CorroborationReport:
        odd_map = make_tensor_power(n, l, cap=self.config.tensor_cap)
        k = odd_map.codomain_dim
        delta = k ** (-1.0 / (2 * l + 1))
        bound = math.pi - math.acos(delta)
        parameters = {"n": n, "l": l, "k": k, "m": k - n + 1}
        try:
            result = MinDiameterSearch(self.config, self.logger).search(odd_map, restarts=restarts, seed=seed)
        except NoFeasiblePoint as e:
            self.logger.warning(f"Tensor-power corroboration exhausted its budget: {e}")
            return CorroborationReport("tensor-power", parameters, None, bound=bound,
                                       details={"status": "no feasible configuration", "delta": delta})
        passed = result.diameter >= bound - CORROBORATION_SLACK
        self.logger.log_solve("corroborate-vi", "PASS" if passed else "FAIL",
                              f"min diameter {result.diameter:.6f} vs bound {bound:.6f}")
        return CorroborationReport("tensor-power", parameters, passed, measured=result.diameter, bound=bound,
                                   details={"delta": delta, "restart": result.restart,
                                            "restarts": result.restarts})

    def corroborate_lattice(self, n: int, l: int, seed: int = None) -> CorroborationReport:
        count = lattice_count(n, l)
        if count > self.config.lattice_cap:
            raise TensorCapExceeded(f"Lattice of {count} points exceeds the cap {self.config.lattice_cap}")
        seed = self.config.seed if seed is None else seed
        preimages = lattice_preimages(n, l)
        points = lattice_points(n, l)

        differences = preimages[:, None, :] - preimages[None, :, :]
        squared = (differences * differences).sum(axis=2)
        np.fill_diagonal(squared, np.iinfo(squared.dtype).max)
        separation = int(squared.min()) if count > 1 else None
        coords = np.array([p.coords for p in points])
        gram = np.clip(coords @ coords.T, -1.0, 1.0)
        np.fill_diagonal(gram, -1.0)
        theta_min = float(np.arccos(gram.max())) if count > 1 else math.pi

        m = count - n
        details = {"count": count, "expected_count": math.comb(l + n - 1, n - 1),
                   "min_squared_preimage_gap": separation, "theta_min": theta_min}
        if m >= 1:
            details["implied_m"] = m
            details["implied_upper"] = math.cos(theta_min)
        passed = len(points) == details["expected_count"] and (separation is None or separation >= 2)

        if count >= 2:
            demo_map = make_random_trig(n, count - 1, degree=3, seed=seed)
            cert = ManifoldSolver(self.config, self.logger).solve_lemma_gen(demo_map, coords, r=0, seed=seed)
            details["demo_residual"] = cert.residual
            details["demo_diameter"] = cert.diameter
            passed = passed and cert.diameter <= math.pi - theta_min + self.config.bound_slack
        self.logger.log_solve("corroborate-lattice", "PASS" if passed else "FAIL",
                              f"{count} points, theta_min {theta_min:.6f}")
        return CorroborationReport("lattice", {"n": n, "l": l}, passed, measured=theta_min,
                                   bound=details.get("implied_upper"), details=details)

    def asymptotic(self, n: int, l_list: Sequence[int], alpha: float) -> AsymptoticReport:
        report = asymptotic_table(n, l_list, alpha)
        self.logger.log_solve("corroborate-asymptotic", report.trend, f"n={n}, alpha={alpha}")
        return report
