from typing import List, Optional, Tuple

import numpy as np

from ..core_data import RiskTable
from .base_estimator import BaseEstimator, EstimandKind, EstimatorWarning


class ConditioningHazard(BaseEstimator):
    """
    Hazard of the standardized population obtained by conditioning on
    counterfactual survival, T(z) >= t.

    Numerator and denominator are standardized separately: every stratum's
    events and at-risk counts are weighted by the stratum size m_x (the
    1/m factors of the empirical P(X=x) cancel) before the ratio is taken.
    """

    def __init__(self) -> None:
        super().__init__(EstimandKind.CCT)

    def _increments(
        self, table: RiskTable, z: int, stratum: Optional[str]
    ) -> Tuple[np.ndarray, List[EstimatorWarning]]:
        sizes = table.stratum_sizes
        numerator = table.events[:, z, :] @ sizes
        denominator = table.at_risk[:, z, :] @ sizes
        increments = np.divide(
            numerator,
            denominator,
            out=np.zeros(numerator.shape, dtype=float),
            where=denominator > 0,
        )
        warnings = [
            EstimatorWarning(
                time=float(table.times[j]),
                arm=z,
                stratum=None,
                message="empty standardized risk set, increment set to 0",
            )
            for j in np.nonzero(denominator == 0)[0]
        ]
        return increments, warnings
