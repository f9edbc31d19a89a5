# antipode/maps.py
"""
Registry of evaluable odd maps f: S(R^n) -> R^d.

Every kind is odd by construction: coordinates are odd-degree monomials or
products of an even factor with an odd one. `oddness_audit` checks it by
sampling anyway, and the solvers refuse maps that fail the audit.
"""
import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from antipode.exceptions import DimensionMismatch, MissingTableEntry, TensorCapExceeded
from antipode.geometry import SpherePoint, from_complex

KINDS = ("inclusion", "random-trig", "poly-eval", "tensor-power", "perturbed-inclusion", "user-table")

DEFAULT_TENSOR_CAP = 10 ** 6
TABLE_MATCH_TOL = 1e-12


def monomial_exponents(n: int, degree: int) -> np.ndarray:
    """All exponent vectors alpha in N^n with |alpha| = degree."""
    return np.array([np.bincount(np.array(c, dtype=int), minlength=n)
                     for c in itertools.combinations_with_replacement(range(n), degree)], dtype=int)


def multinomial(alpha) -> int:
    result = math.factorial(int(sum(alpha)))
    for a in alpha:
        result //= math.factorial(int(a))
    return result


def _monomials(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    return np.prod(points[:, None, :] ** exponents[None, :, :], axis=2)


@dataclass(frozen=True, eq=False)
class OddMapDescriptor:
    kind: str
    domain_dim: int
    codomain_dim: int
    params: dict = field(default_factory=dict)
    seed: Optional[int] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"Unknown map kind {self.kind!r}; expected one of {KINDS}")
        if self.domain_dim < 2:
            raise ValueError(f"domain_dim must be >= 2, got {self.domain_dim}")
        if self.pad < 0:
            raise ValueError("pad must be nonnegative")
        expected = self.base_codomain + self.pad
        if self.codomain_dim != expected:
            raise DimensionMismatch(
                f"{self.kind} on S^{self.domain_dim - 1} maps into R^{expected}, "
                f"descriptor says R^{self.codomain_dim}")

    @property
    def pad(self) -> int:
        return int(self.params.get("pad", 0))

    @property
    def base_codomain(self) -> int:
        n = self.domain_dim
        if self.kind == "inclusion":
            return n
        if self.kind == "poly-eval":
            if n != 2:
                raise DimensionMismatch("poly-eval lives on S(C), domain_dim must be 2")
            return 2 * int(self.params["k"])
        if self.kind == "tensor-power":
            return math.comb(n + 2 * int(self.params["l"]), n - 1)
        if self.kind == "perturbed-inclusion":
            return 2 * n
        if self.kind == "random-trig":
            return int(self.params["d"])
        return len(self.params["values"][0])

    @property
    def name(self) -> str:
        shown = {key: value for key, value in self.params.items() if key not in ("coefficients", "points", "values")}
        return f"{self.kind}{shown}" if shown else self.kind

    # Precomputed pieces

    @cached_property
    def _trig_terms(self):
        degree = int(self.params["degree"])
        exponents = np.vstack([monomial_exponents(self.domain_dim, j) for j in range(1, degree + 1, 2)])
        if "coefficients" in self.params:
            coefficients = np.array(self.params["coefficients"], dtype=float)
        else:
            rng = np.random.default_rng(self.seed)
            coefficients = rng.standard_normal((self.base_codomain, len(exponents)))
        if coefficients.shape != (self.base_codomain, len(exponents)):
            raise DimensionMismatch(
                f"random-trig coefficients must have shape {(self.base_codomain, len(exponents))}, "
                f"got {coefficients.shape}")
        return exponents, coefficients

    @cached_property
    def _tensor_terms(self):
        l = int(self.params["l"])
        exponents = monomial_exponents(self.domain_dim, 2 * l + 1)
        scale = np.sqrt([float(multinomial(alpha)) for alpha in exponents])
        return exponents, scale

    @cached_property
    def _table(self):
        return np.array(self.params["points"], dtype=float), np.array(self.params["values"], dtype=float)

    # Evaluation

    def evaluate_many(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.domain_dim:
            raise DimensionMismatch(
                f"Map {self.name} expects points of R^{self.domain_dim}, got R^{points.shape[1]}")
        values = self._evaluate_base(points)
        if self.pad:
            values = np.hstack([values, np.zeros((len(points), self.pad))])
        return values

    def evaluate(self, v) -> np.ndarray:
        coords = v.coords if isinstance(v, SpherePoint) else v
        return self.evaluate_many(coords)[0]

    def _evaluate_base(self, points: np.ndarray) -> np.ndarray:
        if self.kind == "inclusion":
            return points.copy()
        if self.kind == "poly-eval":
            w = points[:, 0] + 1j * points[:, 1]
            square = w * w
            powers = [w]
            for _ in range(int(self.params["k"]) - 1):
                powers.append(powers[-1] * square)
            return from_complex(np.stack(powers, axis=1))
        if self.kind == "random-trig":
            exponents, coefficients = self._trig_terms
            return _monomials(points, exponents) @ coefficients.T
        if self.kind == "tensor-power":
            exponents, scale = self._tensor_terms
            return _monomials(points, exponents) * scale
        if self.kind == "perturbed-inclusion":
            u = np.array(self.params["u"], dtype=float)
            phi = (points @ u) ** 2
            return np.hstack([points, phi[:, None] * points])
        return self._lookup(points)

    def _lookup(self, points: np.ndarray) -> np.ndarray:
        table_points, table_values = self._table
        rows = []
        for v in points:
            gaps = np.abs(table_points - v).max(axis=1)
            hit = int(np.argmin(gaps))
            if gaps[hit] > TABLE_MATCH_TOL:
                raise MissingTableEntry(f"No table entry for point {v.tolist()}")
            rows.append(table_values[hit])
        return np.array(rows)

    # Serialization

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "domain_dim": self.domain_dim,
            "codomain_dim": self.codomain_dim,
            "params": self.params,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OddMapDescriptor":
        return cls(kind=data["kind"], domain_dim=int(data["domain_dim"]),
                   codomain_dim=int(data["codomain_dim"]), params=dict(data.get("params", {})),
                   seed=data.get("seed"))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "OddMapDescriptor":
        return cls.from_dict(json.loads(text))


def evaluate(odd_map: OddMapDescriptor, v) -> np.ndarray:
    return odd_map.evaluate(v)


def with_codomain(odd_map: OddMapDescriptor, dim: int) -> OddMapDescriptor:
    """Zero-pad the codomain up to R^dim (the inclusion R^d into R^dim)."""
    if dim < odd_map.base_codomain:
        raise DimensionMismatch(f"Cannot include R^{odd_map.base_codomain} into R^{dim}")
    params = dict(odd_map.params)
    params["pad"] = dim - odd_map.base_codomain
    if params["pad"] == 0:
        params.pop("pad")
    return OddMapDescriptor(odd_map.kind, odd_map.domain_dim, dim, params, odd_map.seed)


# Builders

def make_inclusion(n: int, d: int = None) -> OddMapDescriptor:
    base = OddMapDescriptor("inclusion", n, n)
    return base if d is None else with_codomain(base, d)


def make_poly_eval(k: int, pad: int = 0) -> OddMapDescriptor:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    params = {"k": k, "pad": pad} if pad else {"k": k}
    return OddMapDescriptor("poly-eval", 2, 2 * k + pad, params)


def make_tensor_power(n: int, l: int, cap: int = DEFAULT_TENSOR_CAP) -> OddMapDescriptor:
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    k = math.comb(n + 2 * l, n - 1)
    if k > cap:
        raise TensorCapExceeded(f"Symmetric power dimension {k} exceeds the cap {cap}")
    return OddMapDescriptor("tensor-power", n, k, {"l": l})


def make_random_trig(n: int, d: int, degree: int = 3, seed: int = 0, coefficients=None) -> OddMapDescriptor:
    if d < 1:
        raise ValueError(f"codomain dimension must be positive, got {d}")
    if degree < 1 or degree % 2 == 0:
        raise ValueError(f"degree must be a positive odd integer, got {degree}")
    params = {"d": d, "degree": degree}
    if coefficients is not None:
        params["coefficients"] = np.asarray(coefficients, dtype=float).tolist()
    return OddMapDescriptor("random-trig", n, d, params, seed)


def make_perturbed_inclusion(n: int, u=None) -> OddMapDescriptor:
    u = np.eye(n)[0] if u is None else np.asarray(u, dtype=float)
    if u.shape != (n,) or not np.any(u):
        raise ValueError("u must be a non-zero vector of R^n")
    return OddMapDescriptor("perturbed-inclusion", n, 2 * n, {"u": u.tolist()})


def make_user_table(points, values) -> OddMapDescriptor:
    """
    Tabulated map on an antipodally closed sample set. Evaluation only looks
    points up; nothing is interpolated.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if len(points) != len(values):
        raise ValueError("points and values must have the same length")
    for v in points:
        if np.abs(points + v).max(axis=1).min() > TABLE_MATCH_TOL:
            raise ValueError(f"Table is not closed under v -> -v: missing {(-v).tolist()}")
    return OddMapDescriptor("user-table", points.shape[1], values.shape[1],
                            {"points": points.tolist(), "values": values.tolist()})


def random_sphere_points(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    points = rng.standard_normal((count, n))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def oddness_audit(odd_map: OddMapDescriptor, samples: int = 1000, seed: int = 0) -> float:
    """Largest ||f(-v) + f(v)|| over sampled v (the table itself for user tables)."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if odd_map.kind == "user-table":
        points = np.array(odd_map.params["points"], dtype=float)
    else:
        points = random_sphere_points(odd_map.domain_dim, samples, np.random.default_rng(seed))
    residual = odd_map.evaluate_many(points) + odd_map.evaluate_many(-points)
    return float(np.linalg.norm(residual, axis=1).max())
