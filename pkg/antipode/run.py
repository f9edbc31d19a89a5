# antipode/run.py
import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Dict, List, Optional

import numpy as np
import scipy

from antipode import __version__
from antipode.bounds import Corroborator, atlas_table, best_bounds, records_to_csv, records_to_json
from antipode.config import Config
from antipode.exceptions import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, AntipodeError, NotConverged, VerificationFailed
from antipode.geometry import as_array, lattice_points, multiindex_points
from antipode.logger import Logger
from antipode.maps import (OddMapDescriptor, make_inclusion, make_perturbed_inclusion, make_poly_eval,
                           make_random_trig, make_tensor_power, random_sphere_points, with_codomain)
from antipode.solvers.certificate import ConvexCertificate, verify_certificate
from antipode.solvers.circle_solver import CircleSolver
from antipode.solvers.hull_certifier import MinDiameterSearch
from antipode.solvers.manifold_solver import ManifoldSolver, build_simplex_problem

MAP_NAMES = ("random-trig", "inclusion", "inclusion-pad", "poly-eval", "tensor-power", "perturbed-inclusion")
SEARCH_SLACK = 1e-3


@dataclass
class RunManifest:
    command: str
    argv: List[str]
    seed: int
    tolerances: Dict[str, float]
    versions: Dict[str, str]
    wall_time: float = 0.0
    outputs: List[str] = field(default_factory=list)
    status: str = "started"
    exit_code: int = EXIT_OK
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def resolve_map(name: str, domain_dim: int, codomain_dim: int, seed: int, degree: int = 3,
                l: int = 1, tensor_cap: int = 10 ** 6) -> OddMapDescriptor:
    """
    Build a named map on S^{domain_dim-1}, or load a JSON descriptor, and pad
    its codomain up to R^codomain_dim where it is smaller.
    """
    if name == "random-trig":
        return make_random_trig(domain_dim, codomain_dim, degree=degree, seed=seed)
    if name in ("inclusion", "inclusion-pad"):
        base = make_inclusion(domain_dim)
    elif name == "poly-eval":
        if domain_dim != 2:
            raise ValueError("poly-eval is defined on the circle only")
        base = make_poly_eval(max(1, (codomain_dim - 1) // 2))
    elif name == "tensor-power":
        base = make_tensor_power(domain_dim, l, cap=tensor_cap)
    elif name == "perturbed-inclusion":
        base = make_perturbed_inclusion(domain_dim)
    elif os.path.isfile(name):
        with open(name, "r", encoding="utf-8") as f:
            base = OddMapDescriptor.from_json(f.read())
        if base.domain_dim != domain_dim:
            raise ValueError(f"{name} is defined on S^{base.domain_dim - 1}, expected S^{domain_dim - 1}")
    else:
        raise ValueError(f"Unknown map {name!r}; expected one of {MAP_NAMES} or a JSON descriptor file")
    return base if base.codomain_dim == codomain_dim else with_codomain(base, codomain_dim)


class AntipodeRunner:
    def __init__(self, config: Config = None, logger: Logger = None):
        self.config = config or Config()
        self.logger = logger or Logger()
        self.circle = CircleSolver(self.config, self.logger)
        self.manifold = ManifoldSolver(self.config, self.logger)
        self.corroborator = Corroborator(self.config, self.logger)

        self.results = {
            "start_time": datetime.now().isoformat(),
            "command": None,
            "outputs": [],
            "total_time": 0,
        }

    # Output

    def _path(self, name: str) -> str:
        os.makedirs(self.config.output_dir, exist_ok=True)
        return os.path.join(self.config.output_dir, name)

    def write_output(self, name: str, content: str) -> str:
        path = self._path(name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(content if content.endswith("\n") else content + "\n")
        self.results["outputs"].append(path)
        self.logger.info(f"Wrote {path}")
        return path

    def write_certificate(self, cert: ConvexCertificate, name: str = "certificate.json") -> str:
        return self.write_output(name, cert.to_json())

    # Commands

    def solve_circle(self, args) -> dict:
        odd_map = resolve_map(args.map, 2, 2 * args.k + 1, args.seed, degree=2 * args.k + 1,
                              tensor_cap=self.config.tensor_cap)
        cert = self.circle.solve_theorem_1(odd_map, seed=args.seed)
        self.write_certificate(cert)
        return {"residual": cert.residual, "diameter": cert.diameter, "bound": cert.bound,
                "theta": cert.base["theta"], "flags": cert.flags, "reports": cert.reports}

    def solve_simplex(self, args) -> dict:
        d = build_simplex_problem(args.n).codomain_dim
        odd_map = resolve_map(args.map, args.n, d, args.seed, tensor_cap=self.config.tensor_cap)
        cert = self.manifold.solve_simplex_theorem(odd_map, restarts=args.restarts, tol=args.tol, seed=args.seed)
        self.write_certificate(cert)
        return {"residual": cert.residual, "diameter": cert.diameter, "bound": cert.bound,
                "lambdas": cert.lambdas.tolist(), "restart": cert.base.get("restart")}

    def solve_lemma(self, args) -> dict:
        block = 2 ** args.r
        dim = block * args.n
        if args.points == "lattice":
            if args.r != 0:
                raise ValueError("Lattice points are used with r = 0")
            points = as_array(lattice_points(dim, args.l))
        elif args.points == "multiindex":
            if args.r != 1:
                raise ValueError("Multiindex points live in C^n and are used with r = 1")
            count = 2 * args.k + 1
            pool = as_array(multiindex_points(args.n, 1, args.l))
            if len(pool) < count:
                raise ValueError(f"Only {len(pool)} multiindex points for l={args.l}; {count} needed")
            points = pool[:count]
        else:
            points = random_sphere_points(dim, block * args.k + 1, np.random.default_rng(args.seed))
        codomain = len(points) + block - 2
        odd_map = resolve_map(args.map, dim, codomain, args.seed, tensor_cap=self.config.tensor_cap)
        cert = self.manifold.solve_lemma_gen(odd_map, points, r=args.r, restarts=args.restarts,
                                             tol=args.tol, seed=args.seed)
        self.write_certificate(cert)
        return {"residual": cert.residual, "diameter": cert.diameter, "bound": cert.bound}

    def verify(self, args) -> dict:
        with open(args.cert, "r", encoding="utf-8") as f:
            cert = ConvexCertificate.from_json(f.read())
        report = verify_certificate(cert)
        self.write_output("verification.json", json.dumps(report.to_dict(), indent=2, sort_keys=True))
        if not report.passed:
            raise VerificationFailed("; ".join(report.failures), report)
        return report.to_dict()

    def bounds(self, args) -> dict:
        if args.table:
            records = atlas_table(args.table[0], args.table[1], progress=self.config.progress)
        elif args.m is not None and args.n is not None:
            records = [best_bounds(args.m, args.n)]
        else:
            raise ValueError("bounds needs --m and --n, or --table M N")
        table = records_to_csv(records)
        print(table, end="")
        if args.csv:
            self.write_output(args.csv, table)
        if args.json:
            self.write_output(args.json, records_to_json(records))
        return {"rows": len(records)}

    def search_min_diameter(self, args) -> dict:
        if args.map == "poly-eval":
            odd_map = make_poly_eval(args.k)
            bound = math.pi - math.pi / (2 * args.k + 1)
        elif args.map == "tensor-power":
            odd_map = make_tensor_power(args.n, args.l, cap=self.config.tensor_cap)
            bound = math.pi - math.acos(odd_map.codomain_dim ** (-1.0 / (2 * args.l + 1)))
        elif args.map in ("inclusion", "perturbed-inclusion", "random-trig"):
            if args.map == "random-trig":
                odd_map = make_random_trig(args.n, args.n + 1, seed=args.seed)
            else:
                odd_map = make_inclusion(args.n) if args.map == "inclusion" else make_perturbed_inclusion(args.n)
            bound = math.pi - math.acos(1.0 / args.n)
        else:
            with open(args.map, "r", encoding="utf-8") as f:
                odd_map = OddMapDescriptor.from_json(f.read())
            bound = None

        result = MinDiameterSearch(self.config, self.logger).search(
            odd_map, cardinality=args.cardinality, restarts=args.restarts, seed=args.seed)
        passed = None if bound is None else result.diameter >= bound - SEARCH_SLACK
        report = {"map": odd_map.to_dict(), "best_diameter": result.diameter, "bound": bound,
                  "passed": passed, "restart": result.restart, "restarts": result.restarts,
                  "points": as_array(result.configuration).tolist(), "label": "corroboration"}
        self.write_output("search.json", json.dumps(report, indent=2, sort_keys=True))
        return {"best_diameter": result.diameter, "bound": bound, "passed": passed}

    def corroborate(self, args) -> dict:
        if args.experiment == "vi":
            report = self.corroborator.corroborate_vi(args.n, args.l[0], restarts=args.restarts, seed=args.seed)
        elif args.experiment == "lattice":
            report = self.corroborator.corroborate_lattice(args.n, args.l[0], seed=args.seed)
        else:
            report = self.corroborator.asymptotic(args.n, args.l, args.alpha)
            self.write_output("asymptotic.csv", report.to_csv())
        self.write_output(f"corroborate-{args.experiment}.json", json.dumps(report.to_dict(), indent=2))
        return {"trend": report.trend} if args.experiment == "asymptotic" else {"passed": report.passed}

    def run(self, args, argv: List[str]) -> int:
        start = time.perf_counter()
        self.results["command"] = args.command
        manifest = RunManifest(
            command=args.command, argv=list(argv), seed=args.seed, tolerances=self.config.tolerances(),
            versions={"antipode": __version__, "numpy": np.__version__, "scipy": scipy.__version__})
        handler = getattr(self, args.command.replace("-", "_"))
        self.logger.info(f"Running {args.command} (seed {args.seed})")

        try:
            manifest.details = handler(args)
            manifest.status = "ok"
        except NotConverged as e:
            self.logger.error(str(e))
            manifest.status, manifest.exit_code = "not-converged", e.exit_code
            if e.best is not None:
                self.write_certificate(e.best, "best_certificate.json")
                manifest.details = {"best_residual": e.best.residual}
        except VerificationFailed as e:
            self.logger.error(f"Verification failed: {e}")
            manifest.status, manifest.exit_code = "verification-failed", EXIT_VERIFY
            if e.report is not None:
                manifest.details = e.report.to_dict()
        except AntipodeError as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            manifest.status, manifest.exit_code = type(e).__name__, e.exit_code
        except (ValueError, KeyError, OSError) as e:
            self.logger.error(f"{type(e).__name__}: {e}")
            manifest.status, manifest.exit_code = "usage-error", EXIT_USAGE

        self.results["total_time"] = time.perf_counter() - start
        manifest.wall_time = self.results["total_time"]
        manifest.outputs = list(self.results["outputs"])
        self.write_output("manifest.json", manifest.to_json())
        self.logger.info(f"{args.command} finished with status {manifest.status} "
                         f"in {manifest.wall_time:.2f} seconds")
        return manifest.exit_code


def build_parser(config: Config) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=config.seed,
                        help="Random seed (default: ANTIPODE_SEED or 0)")
    common.add_argument("--tol", type=float, default=None, help="Residual tolerance of the certificate")
    common.add_argument("--out", default=config.output_dir, help="Output directory (default: ANTIPODE_OUT or .)")
    common.add_argument("--threads", type=int, default=config.threads,
                        help="Parallel restarts; outputs are reproducible only with 1")
    common.add_argument("--restarts", type=int, default=None, help="Number of search restarts")
    common.add_argument("--no-progress", action="store_true", help="Hide progress bars")

    parser = argparse.ArgumentParser(
        prog="antipode",
        description="Witness sets of small diameter for odd maps on spheres, with verifiable certificates.",
        formatter_class=argparse.RawTextHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    circle = commands.add_parser("solve-circle", parents=[common], help="Roots-of-unity witness set on S(C)")
    circle.add_argument("--k", type=int, required=True, help="Codomain is R^(2k+1)")
    circle.add_argument("--map", default="random-trig", help=f"One of {MAP_NAMES} or a JSON descriptor file")

    simplex = commands.add_parser("solve-simplex", parents=[common], help="Regular simplex moved by SO(V_+)")
    simplex.add_argument("--n", type=int, required=True, help="Domain is S^(n-1)")
    simplex.add_argument("--map", default="random-trig", help=f"One of {MAP_NAMES} or a JSON descriptor file")

    lemma = commands.add_parser("solve-lemma", parents=[common], help="Diagonal SO(2^r) search on given points")
    lemma.add_argument("--r", type=int, required=True, help="Block size 2^r")
    lemma.add_argument("--n", type=int, required=True, help="Domain is S(R^(2^r n))")
    lemma.add_argument("--k", type=int, default=1, help="2^r k + 1 points")
    lemma.add_argument("--l", type=int, default=1, help="Lattice or multiindex parameter")
    lemma.add_argument("--points", choices=("random", "multiindex", "lattice"), default="random")
    lemma.add_argument("--map", default="random-trig", help=f"One of {MAP_NAMES} or a JSON descriptor file")

    verify = commands.add_parser("verify", parents=[common], help="Re-check a certificate file")
    verify.add_argument("--cert", required=True, help="Path to certificate JSON")

    bounds = commands.add_parser("bounds", parents=[common], help="Bounds on delta(m, n)")
    bounds.add_argument("--m", type=int)
    bounds.add_argument("--n", type=int)
    bounds.add_argument("--table", type=int, nargs=2, metavar=("M", "N"),
                        help="m = 1..M and the first N values of n (2..N+1)")
    bounds.add_argument("--csv", help="Also write the table to this file under --out")
    bounds.add_argument("--json", help="Also write the records as JSON under --out")

    search = commands.add_parser("search-min-diameter", parents=[common],
                                 help="Annealing search for the smallest feasible diameter")
    search.add_argument("--map", required=True,
                        help="poly-eval, perturbed-inclusion, inclusion, tensor-power, random-trig or a JSON file")
    search.add_argument("--k", type=int, default=1, help="poly-eval degree parameter")
    search.add_argument("--n", type=int, default=2, help="Domain is S^(n-1)")
    search.add_argument("--l", type=int, default=1, help="tensor-power order 2l+1")
    search.add_argument("--cardinality", type=int, default=None, help="Points per configuration")

    corroborate = commands.add_parser("corroborate", parents=[common], help="Desk-scale corroboration runs")
    corroborate.add_argument("experiment", choices=("vi", "lattice", "asymptotic"))
    corroborate.add_argument("--n", type=int, default=2)
    corroborate.add_argument("--l", type=int, nargs="+", default=[1])
    corroborate.add_argument("--alpha", type=float, default=0.5)
    return parser


def main(argv: Optional[List[str]] = None):
    """Main execution script for the antipode command line."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        defaults = Config()
        try:
            args = build_parser(defaults).parse_args(argv)
        except SystemExit as e:
            # usage errors exit with 1; 2 means solver failure
            sys.exit(EXIT_OK if e.code in (0, None) else EXIT_USAGE)
        overrides = {"seed": args.seed, "threads": args.threads, "output_dir": args.out}
        if args.no_progress:
            overrides["progress"] = False
        if args.restarts is not None:
            overrides["restarts"] = args.restarts
        if args.tol is not None:
            overrides["residual_tol"] = args.tol
        config = Config(**overrides)
    except ValueError as e:
        print(f"antipode: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)

    runner = AntipodeRunner(config, Logger())
    sys.exit(runner.run(args, argv))


if __name__ == "__main__":
    main()
