"""
Error types raised by the clustering toolkit.
"""
from typing import Dict, Optional, Tuple


class ClusteringError(Exception):
    """Base class for every error raised by the toolkit."""
    pass


class InvalidSpecError(ClusteringError, ValueError):
    """Raised when generator or method parameters are out of range."""
    pass


class DatasetParseError(ClusteringError, ValueError):
    """Raised when a CSV file cannot be turned into a Dataset."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[str] = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ShapeError(ClusteringError, ValueError):
    """Raised on dimension or length mismatches."""
    pass


class InsufficientDataError(ClusteringError):
    """Raised when there are fewer points than a sample size requires."""
    pass


class DegenerateDataError(ClusteringError):
    """Raised when the data has too few distinct points."""
    pass


class EmptyClusterError(ClusteringError):
    """Raised when a point set or a cluster id has no members."""
    pass


class TauTooSmallError(ClusteringError):
    """Raised when tau-chaining yields fewer than k groups."""

    MESSAGE = "Parameter τ is set too small !"

    def __init__(self, n_components: int, k: int, tau: float):
        super().__init__(
            f"{self.MESSAGE} (found {n_components} group(s) for k={k} at tau={tau})"
        )
        self.n_components = n_components
        self.k = k
        self.tau = tau


class DegenerateAssignmentError(ClusteringError):
    """Raised when the argmax assignment leaves a cluster empty."""

    def __init__(self, group_index: int):
        super().__init__(f"Cluster {group_index} received no points during assignment")
        self.group_index = group_index


class AllCombinationsFailedError(ClusteringError):
    """Raised by the tuner when no (psi, tau) combination produced a clustering."""

    def __init__(self, causes: Dict[Tuple[int, float], str]):
        listing = "; ".join(f"psi={psi}, tau={tau}: {cause}" for (psi, tau), cause in causes.items())
        super().__init__(f"Every tuning combination failed: {listing}")
        self.causes = causes


class ConfigError(ClusteringError, ValueError):
    """Raised when a bench configuration fails validation."""

    def __init__(self, message: str, field_path: str = ""):
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path
