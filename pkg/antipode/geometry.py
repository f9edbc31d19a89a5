# antipode/geometry.py
"""
Spherical metric and the canonical point configurations.

Complex points live in realified, interleaved coordinates: C^n is stored as
R^{2n} with (Re z_1, Im z_1, Re z_2, Im z_2, ...). Complex scalar
multiplication is the block rotation `rotate`.
"""
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import List, Sequence, Union

import numpy as np
import scipy.linalg

from antipode.exceptions import DimensionMismatch

UNIT_NORM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpherePoint:
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if coords.size < 2:
            raise ValueError(f"A sphere point needs ambient dimension >= 2, got {coords.size}")
        norm = np.linalg.norm(coords)
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"Coordinates are not a unit vector (norm {norm!r})")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return self.coords.size

    @classmethod
    def from_vector(cls, vector) -> "SpherePoint":
        vector = np.asarray(vector, dtype=float).reshape(-1)
        norm = np.linalg.norm(vector)
        if norm == 0.0:
            raise ValueError("Cannot project the zero vector onto the sphere")
        return cls(vector / norm)

    def __neg__(self) -> "SpherePoint":
        return SpherePoint(-self.coords)

    def __repr__(self) -> str:
        return f"SpherePoint({self.coords.tolist()})"


@dataclass(frozen=True, eq=False)
class Configuration:
    """The candidate set X: points w_i with signs e_i, consumed as e_i * w_i."""
    points: List[SpherePoint]
    signs: List[int] = field(default=None)

    def __post_init__(self):
        points = list(self.points)
        if not points:
            raise ValueError("A configuration needs at least one point")
        dims = {p.dim for p in points}
        if len(dims) != 1:
            raise DimensionMismatch(f"Points of a configuration must share one dimension, got {sorted(dims)}")
        signs = [1] * len(points) if self.signs is None else [int(e) for e in self.signs]
        if len(signs) != len(points):
            raise ValueError("signs and points must have the same length")
        if any(e not in (1, -1) for e in signs):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "signs", signs)

    @property
    def dim(self) -> int:
        return self.points[0].dim

    def __len__(self) -> int:
        return len(self.points)

    def signed_coords(self) -> np.ndarray:
        return np.array([e * p.coords for e, p in zip(self.signs, self.points)])

    @classmethod
    def from_array(cls, array, signs=None) -> "Configuration":
        return cls([SpherePoint(row) for row in np.atleast_2d(array)], signs)


PointsLike = Union[Configuration, Sequence[SpherePoint], np.ndarray]


def as_array(points: PointsLike) -> np.ndarray:
    """
    Row-per-point array. Configurations contribute their signed points.
    """
    if isinstance(points, Configuration):
        return points.signed_coords()
    if isinstance(points, np.ndarray):
        return np.atleast_2d(points).astype(float)
    return np.array([p.coords if isinstance(p, SpherePoint) else np.asarray(p, dtype=float) for p in points])


def _coords(u) -> np.ndarray:
    return u.coords if isinstance(u, SpherePoint) else np.asarray(u, dtype=float)


def spherical_distance(u, v) -> float:
    u, v = _coords(u), _coords(v)
    if u.shape != v.shape:
        raise DimensionMismatch(f"Cannot compare points of dimension {u.size} and {v.size}")
    inner = float(np.dot(u, v))
    return math.acos(min(1.0, max(-1.0, inner)))


def gram_matrix(points: PointsLike) -> np.ndarray:
    array = as_array(points)
    return array @ array.T


def diameter(points: PointsLike) -> float:
    array = as_array(points)
    if len(array) < 2:
        return 0.0
    gram = np.clip(array @ array.T, -1.0, 1.0)
    return float(np.arccos(gram.min()))


def min_pairwise_inner(points: PointsLike) -> float:
    array = as_array(points)
    if len(array) < 2:
        raise ValueError("min_pairwise_inner needs at least two points")
    gram = array @ array.T
    upper = np.triu_indices(len(array), k=1)
    return float(gram[upper].min())


def rigidity_bound_holds(points: PointsLike, slack: float = 1e-9) -> bool:
    """
    Some pair of points summing to zero under nonnegative weights meets
    <w_i, w_j> <= -1/n, n the ambient dimension.
    """
    array = as_array(points)
    return min_pairwise_inner(array) <= -1.0 / array.shape[1] + slack


# Complex structure

def to_complex(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.shape[-1] % 2:
        raise DimensionMismatch("Realified complex coordinates need an even dimension")
    return coords[..., 0::2] + 1j * coords[..., 1::2]


def from_complex(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    out = np.empty(values.shape[:-1] + (2 * values.shape[-1],))
    out[..., 0::2] = values.real
    out[..., 1::2] = values.imag
    return out


def rotate(coords, theta: float) -> np.ndarray:
    """Multiplication by e^{i theta} on every complex coordinate."""
    return from_complex(np.exp(1j * theta) * to_complex(coords))


def hermitian_inner(u, v) -> complex:
    return complex(np.vdot(to_complex(_coords(v)), to_complex(_coords(u))))


# Canonical configurations

def roots_of_unity_points(k: int, z: SpherePoint = None) -> List[SpherePoint]:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    z = SpherePoint(np.array([1.0, 0.0])) if z is None else z
    if z.dim != 2:
        raise DimensionMismatch("roots_of_unity_points needs a point of S(C)")
    step = 2.0 * math.pi / (2 * k + 1)
    return [SpherePoint(rotate(z.coords, i * step)) for i in range(2 * k + 1)]


def regular_simplex(n: int) -> List[SpherePoint]:
    if n < 2:
        raise ValueError(f"regular_simplex needs n >= 2, got {n}")
    corners = np.eye(n + 1)
    centered = corners - corners.mean(axis=0)
    hyperplane = scipy.linalg.null_space(np.ones((1, n + 1)))
    vertices = centered @ hyperplane
    vertices /= np.linalg.norm(vertices, axis=1, keepdims=True)
    return [SpherePoint(v) for v in vertices]


def multiindex_points(n: int, r: int, l: int) -> List[SpherePoint]:
    """
    Points (sum_s eta^{a_s} e_{i_s}) / sqrt(r) of S(C^n), eta = e^{2 pi i/(2l+1)},
    ordered by index set then exponent tuple.
    """
    if not 1 <= r <= n:
        raise ValueError(f"Need 1 <= r <= n, got r={r}, n={n}")
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    eta = np.exp(2j * math.pi / (2 * l + 1))
    scale = 1.0 / math.sqrt(r)
    points = []
    for indices in itertools.combinations(range(n), r):
        for exponents in itertools.product(range(2 * l + 1), repeat=r):
            values = np.zeros(n, dtype=complex)
            values[list(indices)] = eta ** np.array(exponents) * scale
            points.append(SpherePoint(from_complex(values)))
    return points


def multiindex_bound(r: int, l: int) -> float:
    """Pairwise bound 1 - (1 - cos(pi/(2l+1)))/r on |<w_i, w_j>|."""
    return 1.0 - (1.0 - math.cos(math.pi / (2 * l + 1))) / r


def simplex_tensor_points(m: int, n: int) -> List[SpherePoint]:
    """
    m+n points of S(R^n): u_i (x) e_j for the regular q-simplex u_i, q = n // m,
    in lexicographic (i, j) order inside R^{qm}, then a basis of the last R^l.
    """
    if not 1 <= m <= n:
        raise ValueError(f"Need 1 <= m <= n, got m={m}, n={n}")
    if n < 2:
        raise ValueError("simplex_tensor_points needs n >= 2")
    q, l = divmod(n, m)
    if q == 1:
        simplex = np.array([[1.0], [-1.0]])
    else:
        simplex = as_array(regular_simplex(q))
    basis = np.eye(m)
    points = []
    for u in simplex:
        for e in basis:
            points.append(np.concatenate([np.kron(u, e), np.zeros(l)]))
    for t in range(l):
        tail = np.zeros(n)
        tail[q * m + t] = 1.0
        points.append(tail)
    return [SpherePoint(p) for p in points]


def lattice_preimages(n: int, l: int) -> np.ndarray:
    """Integer vectors a >= 0 with sum l; a / l is the simplex lattice point."""
    if n < 2:
        raise ValueError(f"lattice needs n >= 2, got {n}")
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    rows = [np.bincount(np.array(c, dtype=int), minlength=n)
            for c in itertools.combinations_with_replacement(range(n), l)]
    return np.array(rows, dtype=int)


def lattice_points(n: int, l: int) -> List[SpherePoint]:
    return [SpherePoint.from_vector(a) for a in lattice_preimages(n, l)]


def lattice_count(n: int, l: int) -> int:
    return math.comb(l + n - 1, n - 1)


# Serialization

def points_to_json(points: PointsLike) -> str:
    # repr of a float is the shortest string that round-trips (at most 17 significant digits)
    return json.dumps(as_array(points).tolist())


def points_from_json(text: str) -> List[SpherePoint]:
    return [SpherePoint(row) for row in json.loads(text)]
