# antipode/config.py
import os
from datetime import datetime
from dotenv import load_dotenv


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}. Please fix it in the .env file.")


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{name} must be a number, got {raw!r}. Please fix it in the .env file.")


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


class Config:
    def __init__(self, **overrides):
        load_dotenv(dotenv_path=os.path.join(os.path.dirname(__file__), '.env'))

        self.seed = _env_int("ANTIPODE_SEED", 0)
        self.residual_tol = _env_float("ANTIPODE_TOL", 1e-9)
        self.hull_tol = _env_float("ANTIPODE_HULL_TOL", 1e-9)
        self.restarts = _env_int("ANTIPODE_RESTARTS", 64)
        self.max_evals = _env_int("ANTIPODE_MAX_EVALS", 100000)
        self.threads = _env_int("ANTIPODE_THREADS", 1)
        self.tensor_cap = _env_int("ANTIPODE_TENSOR_CAP", 1000000)
        self.lattice_cap = _env_int("ANTIPODE_LATTICE_CAP", 100000)
        self.output_dir = os.getenv("ANTIPODE_OUT") or "."
        self.progress = _env_bool("ANTIPODE_PROGRESS", True)
        self.run_timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")

        # Circle solver
        self.degenerate_tol = 1e-12
        self.bisection_width = 1e-13
        self.grid_min = 64
        self.grid_per_point = 16
        self.max_grid_refinements = 3

        # Certificates
        self.oddness_samples = 1000
        self.oddness_tol = 1e-11
        self.weight_sum_tol = 1e-12
        self.diameter_tol = 1e-12
        self.bound_slack = 1e-9

        # Searches
        self.annealing_steps = 400
        self.min_diameter_restarts = 200

        for key, value in overrides.items():
            if not hasattr(self, key):
                raise ValueError(f"Unknown configuration key: {key}")
            setattr(self, key, value)

        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

        self.project_root = os.path.dirname(os.path.dirname(__file__))

    def tolerances(self) -> dict:
        """
        The tolerance set recorded inside certificates and run manifests.
        """
        return {
            "residual_tol": self.residual_tol,
            "hull_tol": self.hull_tol,
            "degenerate_tol": self.degenerate_tol,
            "bisection_width": self.bisection_width,
            "oddness_tol": self.oddness_tol,
            "weight_sum_tol": self.weight_sum_tol,
            "diameter_tol": self.diameter_tol,
            "bound_slack": self.bound_slack,
        }
