# antipode/exceptions.py
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3
EXIT_NOT_CONVERGED = 4


class AntipodeError(Exception):
    exit_code = EXIT_USAGE


class DimensionMismatch(AntipodeError, ValueError):
    pass


class MissingTableEntry(AntipodeError, KeyError):
    pass


class TensorCapExceeded(AntipodeError, ValueError):
    pass


class SolverError(AntipodeError):
    exit_code = EXIT_SOLVER


class NoSignChange(SolverError):
    pass


class IllConditioned(SolverError):
    pass


class DegenerateSquares(SolverError):
    pass


class CaratheodoryError(SolverError):
    pass


class NoFeasiblePoint(SolverError):
    pass


class IterationLimit(SolverError):
    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


class NotConverged(SolverError):
    """Raised with the best certificate found; existence is guaranteed, the search ran out of budget."""
    exit_code = EXIT_NOT_CONVERGED

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class VerificationFailed(AntipodeError):
    exit_code = EXIT_VERIFY

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report
