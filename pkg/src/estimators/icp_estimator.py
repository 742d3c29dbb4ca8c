from typing import List, Optional, Tuple

import numpy as np

from ..core_data import RiskTable
from .base_estimator import BaseEstimator, EstimandKind, EstimatorWarning, standardize, stratum_hazards


class InterventionalHazard(BaseEstimator):
    """
    Hazard of the counterfactual process with the prior event status set to
    n(t-) = 0: a marginal probability, so covariates enter as the m_x/m
    weighted average of the per-stratum hazards.

    A stratum with an empty risk set at t_j contributes 0 but keeps its
    weight; the cell is reported as a warning instead of renormalizing.
    """

    def __init__(self) -> None:
        super().__init__(EstimandKind.ICP)

    def _increments(
        self, table: RiskTable, z: int, stratum: Optional[str]
    ) -> Tuple[np.ndarray, List[EstimatorWarning]]:
        hazards, warnings = stratum_hazards(table, z)
        return standardize(hazards, table), warnings
