# antipode/solvers/certificate.py
import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from antipode.exceptions import AntipodeError
from antipode.geometry import Configuration, diameter
from antipode.maps import OddMapDescriptor, oddness_audit
from antipode.solvers.hull_certifier import contains_origin

AUDIT_SAMPLES = 200

DEFAULT_TOLERANCES = {
    "residual_tol": 1e-9,
    "hull_tol": 1e-9,
    "oddness_tol": 1e-11,
    "weight_sum_tol": 1e-12,
    "diameter_tol": 1e-12,
    "bound_slack": 1e-9,
}


@dataclass
class ConvexCertificate:
    """
    Weights lambda_i >= 0 summing to one with sum lambda_i f(e_i w_i) ~ 0.

    `base` records where the witness was found: {"theta": angle} for the
    circle routes, {"r": r, "params": [...], "sign": +-1} for group searches.
    """
    map: OddMapDescriptor
    base: dict
    points: Configuration
    lambdas: np.ndarray
    residual: float
    diameter: float
    bound: Optional[float] = None
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: Optional[int] = None
    flags: List[str] = field(default_factory=list)
    hull: Optional[dict] = None
    reports: Dict[str, float] = field(default_factory=dict)

    @property
    def signs(self) -> List[int]:
        return self.points.signs

    def mapped_points(self) -> np.ndarray:
        return self.map.evaluate_many(self.points.signed_coords())

    def to_dict(self) -> dict:
        data = {
            "map": self.map.to_dict(),
            "base": self.base,
            "points": [p.coords.tolist() for p in self.points.points],
            "signs": list(self.points.signs),
            "lambdas": np.asarray(self.lambdas, dtype=float).tolist(),
            "residual": self.residual,
            "diameter": self.diameter,
            "bound": self.bound,
            "tolerances": self.tolerances,
            "seed": self.seed,
            "flags": list(self.flags),
            "hull": self.hull,
            "reports": self.reports,
        }
        if "theta" in self.base:
            data["theta"] = self.base["theta"]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexCertificate":
        return cls(
            map=OddMapDescriptor.from_dict(data["map"]),
            base=dict(data["base"]),
            points=Configuration.from_array(np.array(data["points"], dtype=float), data["signs"]),
            lambdas=np.array(data["lambdas"], dtype=float),
            residual=float(data["residual"]),
            diameter=float(data["diameter"]),
            bound=data.get("bound"),
            tolerances={**DEFAULT_TOLERANCES, **data.get("tolerances", {})},
            seed=data.get("seed"),
            flags=list(data.get("flags", [])),
            hull=data.get("hull"),
            reports=dict(data.get("reports", {})),
        )

    @classmethod
    def from_json(cls, text: str) -> "ConvexCertificate":
        return cls.from_dict(json.loads(text))


def convex_residual(odd_map: OddMapDescriptor, points: Configuration, lambdas) -> float:
    values = odd_map.evaluate_many(points.signed_coords())
    return float(np.linalg.norm(np.asarray(lambdas, dtype=float) @ values))


def build_certificate(odd_map: OddMapDescriptor, base: dict, points: Configuration, lambdas,
                      tolerances: dict, bound: float = None, seed: int = None,
                      flags: List[str] = None) -> ConvexCertificate:
    lambdas = np.asarray(lambdas, dtype=float)
    return ConvexCertificate(
        map=odd_map, base=base, points=points, lambdas=lambdas,
        residual=convex_residual(odd_map, points, lambdas),
        diameter=diameter(points), bound=bound,
        tolerances={**DEFAULT_TOLERANCES, **tolerances}, seed=seed, flags=list(flags or []),
    )


@dataclass
class VerificationReport:
    passed: bool
    failures: List[str]
    checks: Dict[str, float]

    def to_dict(self) -> dict:
        return {"passed": self.passed, "failures": self.failures, "checks": self.checks}


def verify_certificate(cert: ConvexCertificate, check_hull: bool = True,
                       audit_samples: int = AUDIT_SAMPLES) -> VerificationReport:
    """
    Recompute everything a certificate claims. Never raises: evaluation
    problems are reported as failures.
    """
    tol = {**DEFAULT_TOLERANCES, **cert.tolerances}
    failures, checks = [], {}
    lambdas = np.asarray(cert.lambdas, dtype=float)

    if len(lambdas) != len(cert.points):
        failures.append("lambdas and points differ in length")
        return VerificationReport(False, failures, checks)

    try:
        checks["oddness"] = oddness_audit(cert.map, audit_samples, cert.seed or 0)
        if checks["oddness"] > tol["oddness_tol"]:
            failures.append(f"map is not odd: audit residual {checks['oddness']:.3e}")
    except AntipodeError as e:
        failures.append(f"oddness audit failed: {e}")

    checks["min_lambda"] = float(lambdas.min())
    if lambdas.min() < 0:
        failures.append(f"negative weight {lambdas.min():.3e}")
    checks["weight_sum_error"] = float(abs(lambdas.sum() - 1.0))
    if checks["weight_sum_error"] > tol["weight_sum_tol"]:
        failures.append(f"weights sum to {lambdas.sum():.15f}")

    try:
        values = cert.map.evaluate_many(cert.points.signed_coords())
    except AntipodeError as e:
        failures.append(f"map evaluation failed: {e}")
        return VerificationReport(False, failures, checks)

    residual = float(np.linalg.norm(lambdas @ values))
    checks["residual"] = residual
    if residual > tol["residual_tol"]:
        failures.append(f"residual {residual:.3e} above tolerance {tol['residual_tol']:.1e}")
    if residual > 2.0 * cert.residual + 1e-15:
        failures.append(f"residual {residual:.3e} disagrees with stated {cert.residual:.3e}")

    recomputed = diameter(cert.points)
    checks["diameter"] = recomputed
    if abs(recomputed - cert.diameter) > tol["diameter_tol"]:
        failures.append(f"diameter mismatch: stated {cert.diameter!r}, recomputed {recomputed!r}")
    if cert.bound is not None and recomputed > cert.bound + tol["bound_slack"]:
        failures.append(f"diameter {recomputed:.12f} exceeds the bound {cert.bound:.12f}")

    if check_hull:
        try:
            verdict = contains_origin(values, max(tol["hull_tol"], tol["residual_tol"]))
        except AntipodeError as e:
            failures.append(f"hull certifier failed: {e}")
        else:
            checks["hull_gap"] = verdict.gap
            if not verdict.inside:
                failures.append(f"hull certifier finds 0 outside conv f(X) (margin {verdict.margin:.3e})")

    return VerificationReport(not failures, failures, checks)
