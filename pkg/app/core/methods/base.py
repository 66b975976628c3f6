"""
Base class for clustering methods run by the bench harness.
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional

from app.core.dataset import Dataset
from app.core.exceptions import InvalidSpecError


class ClusteringMethod(ABC):
    """
    A clustering method with a one-off preparation step and seeded runs.

    ``prepare`` validates and resolves the parameters shared by all runs; ``run``
    may then be called concurrently with different seeds and may tune per seed.
    """

    name: str = ""

    def __init__(self, k: Optional[int] = None):
        self.k = k

    def resolve_k(self, dataset: Dataset) -> int:
        """Requested cluster count, falling back to the ground-truth count."""
        if self.k is not None:
            return self.k
        if dataset.n_clusters is None:
            raise InvalidSpecError(
                f"{self.name}: k is required for unlabelled dataset '{dataset.name}'"
            )
        return dataset.n_clusters

    @abstractmethod
    def prepare(self, dataset: Dataset, seed: int) -> Dict[str, Any]:
        """
        Resolve the parameters shared by every subsequent run.

        Args:
            dataset: Dataset the runs will cluster
            seed: Seed for any tuning done here

        Returns:
            Resolved parameters (recorded with each run)
        """
        pass

    @abstractmethod
    def run(self, dataset: Dataset, seed: int):
        """
        Cluster the dataset once.

        Args:
            dataset: Dataset passed to ``prepare``
            seed: Run seed

        Returns:
            ClusteringResult
        """
        pass

    @abstractmethod
    def resolved_params(self) -> Dict[str, Any]:
        """Parameters resolved by ``prepare``."""
        pass
