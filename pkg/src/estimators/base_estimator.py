from abc import ABC, abstractmethod
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..core_data import ARMS, RiskTable
from ..errors import ConfigError

logger = logging.getLogger(__name__)


class EstimandKind(Enum):
    MARGINAL = "marginal"
    CCT = "cct"
    ICP = "icp"
    CONDITIONAL = "conditional"


@dataclass(frozen=True)
class EstimatorWarning:
    """A (t_j, x) cell whose risk set is empty for the estimated arm."""

    time: float
    arm: int
    stratum: Optional[str]
    message: str

    def to_dict(self) -> Dict[str, Any]:
        return {"time": self.time, "arm": self.arm, "stratum": self.stratum, "message": self.message}


@dataclass(frozen=True, eq=False)
class HazardCurve:
    kind: EstimandKind
    arm: int
    times: np.ndarray
    increments: np.ndarray
    stratum: Optional[str] = None
    warnings: Tuple[EstimatorWarning, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if len(self.increments) != len(self.times):
            raise ValueError(
                f"increments ({len(self.increments)}) and times ({len(self.times)}) differ in length"
            )
        if np.any(self.increments < 0) or np.any(self.increments > 1):
            raise ValueError(f"{self.kind.value} increments outside [0, 1]")
        self.times.setflags(write=False)
        self.increments.setflags(write=False)

    @property
    def label(self) -> str:
        if self.kind is EstimandKind.CONDITIONAL:
            return f"{self.kind.value}_{self.stratum}_arm{self.arm}"
        return f"{self.kind.value}_arm{self.arm}"

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.increments)


def check_arm(z: int) -> int:
    if z not in ARMS:
        raise ConfigError(f"arm must be 0 or 1, got {z!r}")
    return int(z)


def stratum_hazards(table: RiskTable, z: int) -> Tuple[np.ndarray, List[EstimatorWarning]]:
    """
    d(t_j,z,x) / r(t_j,z,x) for every (j, x), 0 where r = 0.

    Returns the (J, X) matrix and a warning per empty risk set cell.
    """
    d = table.events[:, z, :]
    r = table.at_risk[:, z, :]
    hazards = np.divide(d, r, out=np.zeros(d.shape, dtype=float), where=r > 0)
    warnings = [
        EstimatorWarning(
            time=float(table.times[j]),
            arm=z,
            stratum=table.strata[x],
            message="empty risk set: identification fails locally, cell contributes 0",
        )
        for j, x in zip(*np.nonzero(r == 0))
    ]
    return hazards, warnings


def standardize(hazards: np.ndarray, table: RiskTable) -> np.ndarray:
    """Sum over strata of per-stratum hazards weighted by m_x / m."""
    return hazards @ table.stratum_weights


class BaseEstimator(ABC):
    """Turns a risk table into one hazard curve per arm."""

    def __init__(self, kind: EstimandKind) -> None:
        self.kind = kind

    @abstractmethod
    def _increments(
        self, table: RiskTable, z: int, stratum: Optional[str]
    ) -> Tuple[np.ndarray, List[EstimatorWarning]]:
        pass

    def estimate(self, table: RiskTable, z: int, stratum: Optional[str] = None) -> HazardCurve:
        """
        Estimate the hazard increments of arm ``z`` on the table's grid.

        Args:
            table: Aggregated counts of the cohort.
            z: Treatment arm (0 or 1).
            stratum: Stratum label; only used by the conditional estimand.

        Returns:
            HazardCurve with one increment per event time and any
            empty-risk-set warnings attached.
        """
        z = check_arm(z)
        increments, warnings = self._increments(table, z, stratum)
        for w in warnings:
            logger.debug(f"{self.kind.value} arm {z}: {w.message} at t={w.time} stratum={w.stratum}")
        if warnings:
            logger.warning(f"{self.kind.value} arm {z}: {len(warnings)} empty risk set cell(s)")
        return HazardCurve(
            kind=self.kind,
            arm=z,
            times=np.array(table.times, dtype=float),
            increments=np.clip(increments, 0.0, 1.0),
            stratum=stratum if self.kind is EstimandKind.CONDITIONAL else None,
            warnings=tuple(warnings),
        )
