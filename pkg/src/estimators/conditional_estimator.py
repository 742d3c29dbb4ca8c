from typing import List, Optional, Tuple

import numpy as np

from ..core_data import RiskTable
from ..errors import ConfigError
from .base_estimator import BaseEstimator, EstimandKind, EstimatorWarning, stratum_hazards


class ConditionalHazard(BaseEstimator):
    """Per-stratum hazard d(t_j,z,x) / r(t_j,z,x)."""

    def __init__(self) -> None:
        super().__init__(EstimandKind.CONDITIONAL)

    def _increments(
        self, table: RiskTable, z: int, stratum: Optional[str]
    ) -> Tuple[np.ndarray, List[EstimatorWarning]]:
        if stratum is None:
            raise ConfigError("conditional hazard requires a stratum label")
        x = table.stratum_index(stratum)
        hazards, warnings = stratum_hazards(table, z)
        label = table.strata[x]
        return hazards[:, x].copy(), [w for w in warnings if w.stratum == label]
