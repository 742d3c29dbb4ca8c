from typing import List, Optional, Tuple

import numpy as np

from ..core_data import RiskTable
from .base_estimator import BaseEstimator, EstimandKind, EstimatorWarning


class MarginalNelsonAalen(BaseEstimator):
    """Naive Nelson-Aalen increments that ignore the strata."""

    def __init__(self) -> None:
        super().__init__(EstimandKind.MARGINAL)

    def _increments(
        self, table: RiskTable, z: int, stratum: Optional[str]
    ) -> Tuple[np.ndarray, List[EstimatorWarning]]:
        d = table.events[:, z, :].sum(axis=1)
        r = table.at_risk[:, z, :].sum(axis=1)
        increments = np.divide(d, r, out=np.zeros(d.shape, dtype=float), where=r > 0)
        warnings = [
            EstimatorWarning(
                time=float(table.times[j]),
                arm=z,
                stratum=None,
                message="empty risk set: arm has no subject at risk, increment set to 0",
            )
            for j in np.nonzero(r == 0)[0]
        ]
        return increments, warnings
