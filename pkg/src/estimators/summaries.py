"""
Summaries built on hazard curves: cumulative and average hazards over a
horizon, the actual risk of the observed arm, collapsibility diagnostics
and per-time contrasts between arms.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..core_data import Cohort, RiskTable
from ..errors import CensoredRiskError, ConfigError
from .base_estimator import HazardCurve, check_arm, standardize, stratum_hazards
from .cct_estimator import ConditioningHazard
from .icp_estimator import InterventionalHazard

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SummaryMeasures:
    cumulative: float
    average: float
    horizon: float
    n_times: int
    start: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cumulative": self.cumulative,
            "average": self.average,
            "horizon": self.horizon,
            "n_times": self.n_times,
            "start": self.start,
        }


@dataclass(frozen=True, eq=False)
class CollapsibilityGap:
    """Per-time distance of the cCT and iCP increments from the m_x/m weighted conditional average."""

    arm: int
    times: np.ndarray
    cct: np.ndarray
    icp: np.ndarray


@dataclass(frozen=True, eq=False)
class HazardContrast:
    arm_treated: int
    arm_control: int
    times: np.ndarray
    difference: np.ndarray
    ratio: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "arm_treated": self.arm_treated,
            "arm_control": self.arm_control,
            "times": self.times.tolist(),
            "difference": self.difference.tolist(),
            "ratio": [None if np.isnan(v) else float(v) for v in self.ratio],
        }


def summarize(curve: HazardCurve, tau: float, start: Optional[float] = None) -> SummaryMeasures:
    """
    Cumulative and average hazard up to ``tau``.

    The average divides by J_tau, the number of grid times t_j <= tau (the
    size of the multiverse up to the horizon). With ``start`` only grid
    times in (start, tau] are used.

    Raises:
        ConfigError: If no grid time falls in the window.
    """
    mask = curve.times <= tau
    if start is not None:
        mask &= curve.times > start
    n_times = int(mask.sum())
    if n_times == 0:
        window = f"({start}, {tau}]" if start is not None else f"up to {tau}"
        raise ConfigError(f"no event times in window {window}; tau must be >= t_1")
    cumulative = float(curve.increments[mask].sum())
    return SummaryMeasures(
        cumulative=cumulative,
        average=cumulative / n_times,
        horizon=float(tau),
        n_times=n_times,
        start=start,
    )


def actual_risk(cohort: Cohort, z: int, tau: float) -> float:
    """
    Proportion of arm ``z`` that died by ``tau`` in the actual world.

    Raises:
        CensoredRiskError: If some arm-z subject is censored before ``tau``;
            the risk is only defined for fully observed deaths.
        ConfigError: If the arm is empty.
    """
    z = check_arm(z)
    in_arm = cohort.arms == z
    n_arm = int(in_arm.sum())
    if n_arm == 0:
        raise ConfigError(f"arm {z} has no subjects")
    censored_early = in_arm & (cohort.events == 0) & (cohort.times < tau)
    if censored_early.any():
        raise CensoredRiskError(
            f"risk undefined under censoring; use simulated truth "
            f"({int(censored_early.sum())} arm-{z} subject(s) censored before tau={tau})"
        )
    deaths = int((in_arm & (cohort.events == 1) & (cohort.times <= tau)).sum())
    return deaths / n_arm


def collapsibility_gap(table: RiskTable, z: int) -> CollapsibilityGap:
    """
    Distance of cCT and iCP increments from sum_x dL(t_j|z,x) m_x/m.

    The iCP gap is identically zero; a nonzero cCT gap is the
    non-collapsibility of a conditional probability.

    Raises:
        ConfigError: With fewer than two strata.
    """
    z = check_arm(z)
    if len(table.strata) < 2:
        raise ConfigError("collapsibility gap needs at least 2 strata")
    hazards, _ = stratum_hazards(table, z)
    weighted = np.clip(standardize(hazards, table), 0.0, 1.0)
    cct = ConditioningHazard().estimate(table, z)
    icp = InterventionalHazard().estimate(table, z)
    return CollapsibilityGap(
        arm=z,
        times=np.array(table.times, dtype=float),
        cct=cct.increments - weighted,
        icp=icp.increments - weighted,
    )


def hazard_contrast(treated: HazardCurve, control: HazardCurve) -> HazardContrast:
    """
    Per-time difference and ratio of two curves of the same kind.

    Ratios are NaN where the control increment is 0.
    """
    if treated.kind is not control.kind or treated.stratum != control.stratum:
        raise ConfigError(f"cannot contrast {treated.label} with {control.label}")
    if not np.array_equal(treated.times, control.times):
        raise ConfigError("curves are on different time grids")
    ratio = np.divide(
        treated.increments,
        control.increments,
        out=np.full(len(control.times), np.nan),
        where=control.increments > 0,
    )
    return HazardContrast(
        arm_treated=treated.arm,
        arm_control=control.arm,
        times=np.array(treated.times),
        difference=treated.increments - control.increments,
        ratio=ratio,
    )
