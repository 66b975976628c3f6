"""
KBC as a bench method: psi and tau are chosen by the objective on every run.
"""
from dataclasses import replace
from typing import Any, Dict, Optional, Sequence

from config import settings, logger
from app.core.dataset import Dataset
from app.core.exceptions import InvalidSpecError
from app.core.methods.base import ClusteringMethod
from app.services import kbc


class KbcMethod(ClusteringMethod):
    """
    Kernel Bounded Clustering.

    With a single (psi, tau) combination every run is a plain fit. With a grid,
    each run tunes on its own seed and grid entries that fail under that seed
    are skipped.
    """

    name = "kbc"

    def __init__(
        self,
        k: Optional[int] = None,
        psi_grid: Optional[Sequence[int]] = None,
        tau_grid: Optional[Sequence[float]] = None,
        t: Optional[int] = None,
        sample_size: Optional[int] = None,
        max_refine_iters: Optional[int] = None,
        workers: int = 1
    ):
        super().__init__(k)
        self.psi_grid = list(psi_grid) if psi_grid is not None else list(settings.ik_psi_grid)
        self.tau_grid = list(tau_grid) if tau_grid is not None else list(settings.kbc_tau_grid)
        self.t = t if t is not None else settings.ik_t
        self.sample_size = sample_size
        self.max_refine_iters = (
            max_refine_iters if max_refine_iters is not None else settings.kbc_max_refine_iters
        )
        self.workers = workers
        self.params: Optional[kbc.KbcParams] = None
        self.tuning_reports: Dict[int, kbc.TuningReport] = {}

    @property
    def tunes(self) -> bool:
        return len(self.psi_grid) * len(self.tau_grid) > 1

    def prepare(self, dataset: Dataset, seed: int) -> Dict[str, Any]:
        if not self.psi_grid or not self.tau_grid:
            raise InvalidSpecError("kbc: psi_grid and tau_grid must not be empty")
        k = self.resolve_k(dataset)
        self.params = kbc.KbcParams(
            k=k,
            tau=float(min(self.tau_grid)),
            psi=int(min(self.psi_grid)),
            t=self.t,
            s=self.sample_size,
            max_refine_iters=self.max_refine_iters,
        ).resolve(dataset.n)
        if self.tunes:
            logger.info(
                f"{dataset.name}/kbc tunes {len(self.psi_grid)} psi x {len(self.tau_grid)} tau per run"
            )
        return self.resolved_params()

    def run(self, dataset: Dataset, seed: int):
        if self.params is None:
            raise InvalidSpecError("KbcMethod.run called before prepare")
        if not self.tunes:
            return kbc.fit(dataset, replace(self.params, seed=seed), workers=self.workers)

        best, result, report = kbc.tune(
            dataset,
            self.psi_grid,
            self.tau_grid,
            k=self.params.k,
            s=self.sample_size,
            t=self.t,
            seed=seed,
            max_refine_iters=self.max_refine_iters,
            workers=self.workers,
        )
        self.tuning_reports[seed] = report
        logger.debug(f"{dataset.name}/kbc seed {seed}: psi={best.psi}, tau={best.tau}")
        return result

    def resolved_params(self) -> Dict[str, Any]:
        if self.params is None:
            return {}
        params = self.params.to_dict()
        params.pop("seed")
        if self.tunes:
            del params["psi"], params["tau"]
            params["psi_grid"] = list(self.psi_grid)
            params["tau_grid"] = list(self.tau_grid)
        return params
