# Hazard estimators
from typing import Dict, Type

from ..core_data import RiskTable
from ..errors import ConfigError
from .base_estimator import BaseEstimator, EstimandKind, EstimatorWarning, HazardCurve
from .cct_estimator import ConditioningHazard
from .conditional_estimator import ConditionalHazard
from .icp_estimator import InterventionalHazard
from .marginal_estimator import MarginalNelsonAalen
from .summaries import (
    CollapsibilityGap,
    HazardContrast,
    SummaryMeasures,
    actual_risk,
    collapsibility_gap,
    hazard_contrast,
    summarize,
)

ESTIMATORS: Dict[EstimandKind, Type[BaseEstimator]] = {
    EstimandKind.MARGINAL: MarginalNelsonAalen,
    EstimandKind.CCT: ConditioningHazard,
    EstimandKind.ICP: InterventionalHazard,
    EstimandKind.CONDITIONAL: ConditionalHazard,
}


def get_estimator(kind: str) -> BaseEstimator:
    try:
        return ESTIMATORS[EstimandKind(kind)]()
    except ValueError:
        known = ", ".join(k.value for k in EstimandKind)
        raise ConfigError(f"unknown estimand kind {kind!r}; expected one of: {known}")


def marginal_nelson_aalen(table: RiskTable, z: int) -> HazardCurve:
    return MarginalNelsonAalen().estimate(table, z)


def cct_hazard(table: RiskTable, z: int) -> HazardCurve:
    return ConditioningHazard().estimate(table, z)


def icp_hazard(table: RiskTable, z: int) -> HazardCurve:
    return InterventionalHazard().estimate(table, z)


def conditional_hazard(table: RiskTable, z: int, x: str) -> HazardCurve:
    return ConditionalHazard().estimate(table, z, stratum=x)


__all__ = [
    "BaseEstimator",
    "CollapsibilityGap",
    "ConditionalHazard",
    "ConditioningHazard",
    "ESTIMATORS",
    "EstimandKind",
    "EstimatorWarning",
    "HazardContrast",
    "HazardCurve",
    "InterventionalHazard",
    "MarginalNelsonAalen",
    "SummaryMeasures",
    "actual_risk",
    "cct_hazard",
    "collapsibility_gap",
    "conditional_hazard",
    "get_estimator",
    "hazard_contrast",
    "icp_hazard",
    "marginal_nelson_aalen",
    "summarize",
]
