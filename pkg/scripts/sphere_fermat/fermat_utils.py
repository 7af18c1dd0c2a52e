"""
Utility functions for the spherical Fermat-Torricelli tools
Provides consistent error handling, logging, and helper functions.
"""

import logging
import math
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional


LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class FermatError(Exception):
    """Base class for every failure raised by the sphere_fermat modules."""


class DegenerateDirection(FermatError):
    """Geodesic direction undefined (coincident or antipodal points)."""


class OutOfRange(FermatError):
    """Arc length outside the geodesic it is measured along."""


class DegenerateTriangle(FermatError):
    """Triangle vertices coincide, are antipodal, or have a side of length π."""


class WeightsNotFloating(FermatError):
    """Weights put the minimizer on a vertex (or leave the vertex angles at A0 undefined)."""


class NotFloating(WeightsNotFloating):
    """A plasticity construction was requested for an absorbed configuration."""


class NumericalDomain(FermatError):
    """A radicand or arccos argument left its real domain."""


class DomainError(FermatError):
    """Inputs of the shrunken-side equations are inconsistent."""


class OffsetTooLarge(FermatError):
    """A shrink offset reaches or passes the Fermat point."""


class InfeasibleTarget(FermatError):
    """The inverse solver converged to offsets that cannot be realized."""


class AmbiguousAbsorption(FermatError):
    """More than one vertex satisfies the absorbed-case inequality."""


class NoConvergence(FermatError):
    """An iterative solver ran out of iterations above its tolerance."""

    def __init__(self, message: str, best: Any = None, residual: float = math.inf):
        super().__init__(message)
        self.best = best
        self.residual = residual


class NoRealSolution(FermatError):
    """The Weierstrass reduction produced no feasible real root."""

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ValidationError(FermatError):
    """Command-line input could not be turned into a valid run configuration."""


# Configure logging
def setup_logging(run_id: str, log_file_path: Optional[str] = None, level: str = "INFO") -> logging.Logger:
    """
    Set up logging for a command-line run.

    Args:
        run_id: Identifier of the run, echoed in the first log line
        log_file_path: Optional path for a log file. If None, logs only go to stderr.
        level: Logging level name
    """
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file_path:
        log_file = Path(log_file_path)
        log_file.parent.mkdir(exist_ok=True, parents=True)
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True  # Override existing configuration
    )

    logger = logging.getLogger("sphere_fermat")
    logger.info(f"Starting run: {run_id}")
    if log_file_path:
        logger.info(f"Log file: {log_file_path}")
    return logger


def handle_exception(e: Exception, logger: logging.Logger, context: str) -> Dict[str, Any]:
    """Standardized exception handling with logging."""
    error_details: Dict[str, Any] = {
        "error_type": type(e).__name__,
        "error_message": str(e),
        "context": context,
    }
    if isinstance(e, NoConvergence):
        error_details["residual"] = e.residual
    if isinstance(e, NoRealSolution):
        error_details["branches"] = e.diagnostics

    logger.error(f"Error in {context}: {str(e)}")
    logger.debug(traceback.format_exc())

    return error_details


def one_line(message: str) -> str:
    """Collapse a message onto a single line for machine parsing."""
    return " ".join(str(message).split())
