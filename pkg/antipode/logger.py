# antipode/logger.py
import logging
import sys


class Logger:
    def __init__(self, name="antipode", level=logging.INFO):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)

        if not self.logger.handlers:
            console_handler = logging.StreamHandler(sys.stdout)
            console_handler.setLevel(level)

            formatter = logging.Formatter(
                '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            )
            console_handler.setFormatter(formatter)
            self.logger.addHandler(console_handler)

    def info(self, message):
        self.logger.info(message)

    def warning(self, message):
        self.logger.warning(message)

    def error(self, message):
        self.logger.error(message)

    def debug(self, message):
        self.logger.debug(message)

    def log_solve(self, solver: str, status: str, details: str = ""):
        """
        One line per solver outcome: started, certified, degenerate, failed.
        """
        message = f"Solver: {solver} | Status: {status}"
        if details:
            message += f" | Details: {details}"
        self.info(message)

    def log_restart(self, solver: str, index: int, residual: float, converged: bool):
        status = "CONVERGED" if converged else "open"
        self.debug(f"Solver: {solver} | Restart: {index} | Residual: {residual:.3e} | {status}")
