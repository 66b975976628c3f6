"""
k-means as a bench method.
"""
from dataclasses import replace
from typing import Any, Dict, Optional

from config import settings
from app.core.dataset import Dataset
from app.core.exceptions import InvalidSpecError
from app.core.methods.base import ClusteringMethod
from app.services.baselines import KmeansParams, kmeans_fit


class KmeansMethod(ClusteringMethod):
    """Lloyd's k-means with k-means++ restarts."""

    name = "kmeans"

    def __init__(
        self,
        k: Optional[int] = None,
        n_init: Optional[int] = None,
        max_iters: Optional[int] = None,
        tol: Optional[float] = None,
        workers: int = 1
    ):
        super().__init__(k)
        self.n_init = n_init if n_init is not None else settings.kmeans_n_init
        self.max_iters = max_iters if max_iters is not None else settings.kmeans_max_iters
        self.tol = tol if tol is not None else settings.kmeans_tol
        self.workers = workers
        self.params: Optional[KmeansParams] = None

    def prepare(self, dataset: Dataset, seed: int) -> Dict[str, Any]:
        self.params = KmeansParams(
            k=self.resolve_k(dataset),
            n_init=self.n_init,
            max_iters=self.max_iters,
            tol=self.tol,
        )
        self.params.validate(dataset.n)
        return self.resolved_params()

    def run(self, dataset: Dataset, seed: int):
        if self.params is None:
            raise InvalidSpecError("KmeansMethod.run called before prepare")
        return kmeans_fit(dataset, replace(self.params, seed=seed), workers=self.workers)

    def resolved_params(self) -> Dict[str, Any]:
        if self.params is None:
            return {}
        params = self.params.to_dict()
        params.pop("seed")
        return params
