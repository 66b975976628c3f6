"""
Factory for creating clustering methods.
"""
from typing import List

from app.core.exceptions import InvalidSpecError
from .base import ClusteringMethod
from .kbc_method import KbcMethod
from .kmeans_method import KmeansMethod

# Parameters a method spec may carry for each method
KBC_PARAMS = ("k", "psi_grid", "tau_grid", "t", "sample_size", "max_refine_iters", "workers")
KMEANS_PARAMS = ("k", "n_init", "max_iters", "tol", "workers")


class MethodFactory:
    """Factory for creating clustering methods."""

    @staticmethod
    def available_methods() -> List[str]:
        return ["kbc", "kmeans"]

    @staticmethod
    def create_method(
            method_type: str,
            **kwargs
    ) -> ClusteringMethod:
        """
        Create a clustering method instance.

        Args:
            method_type: 'kbc' or 'kmeans'
            **kwargs: Method parameters; keys belonging to other methods are ignored

        Returns:
            ClusteringMethod instance

        Raises:
            InvalidSpecError: If method_type is not supported
        """
        method_type = method_type.lower()

        if method_type == 'kbc':
            return MethodFactory._create_kbc(**kwargs)
        elif method_type in ['kmeans', 'k-means']:
            return MethodFactory._create_kmeans(**kwargs)
        else:
            raise InvalidSpecError(
                f"Unsupported method type: {method_type}. "
                f"Supported types: {', '.join(MethodFactory.available_methods())}"
            )

    @staticmethod
    def _create_kbc(**kwargs) -> KbcMethod:
        """Create a KBC method."""
        return KbcMethod(**{key: kwargs[key] for key in KBC_PARAMS if kwargs.get(key) is not None})

    @staticmethod
    def _create_kmeans(**kwargs) -> KmeansMethod:
        """Create a k-means method."""
        return KmeansMethod(**{key: kwargs[key] for key in KMEANS_PARAMS if kwargs.get(key) is not None})
