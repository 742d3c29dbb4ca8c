"""
Multiverse of Hazard

Executable possible-world semantics for the interventional hazard. World j
is the actual world with the prior event status set to n(t_j-) = 0: nobody
dies before t_j, so every arm keeps its full baseline size, and the risk of
world j is the hazard at t_j.

A PotentialOutcomeLattice stores the m x J potential-death matrix D that
couples the actual world with its J possible worlds:

- D[i, j] = 0 for j < k_i (a subject that survived t_j also survives it in
  world j),
- D[i, k_i] = 1 (actual deaths happen in their own world),
- D[i, j] is a free potential outcome only for j > k_i,
- D[i, :] = 0 for subjects that never die in the actual world.

Under this coupling the actual risk F(tau) is bounded below by the average
and above by the cumulative iCP hazard.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .core_data import ARMS, Cohort, build_risk_table, stratum_sort_key
from .errors import ConfigError, DataIOError, LatticeInvariantError
from .estimators import icp_hazard, marginal_nelson_aalen

logger = logging.getLogger(__name__)

NO_DEATH = -1
GROUPS = ("pooled", "arm0", "arm1")


@dataclass(frozen=True, eq=False)
class PotentialOutcomeLattice:
    """
    Ground truth of one simulated study.

    ``death_index`` is 0-based with ``NO_DEATH`` for subjects that never die
    in the actual world; ``deaths[i, j]`` is 1 when subject i dies in world
    j. ``frail`` holds the latent frailty class when the generating process
    had one; it is never part of an observed cohort.
    """

    times: Tuple[float, ...]
    ids: np.ndarray
    arms: np.ndarray
    strata: Tuple[str, ...]
    death_index: np.ndarray
    deaths: np.ndarray
    frail: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        m = len(self.ids)
        J = len(self.times)
        if J == 0:
            raise LatticeInvariantError("lattice needs at least one world")
        if np.any(np.diff(np.asarray(self.times, dtype=float)) <= 0):
            raise LatticeInvariantError("world times must be strictly increasing")
        if self.deaths.shape != (m, J):
            raise LatticeInvariantError(f"death matrix has shape {self.deaths.shape}, expected {(m, J)}")
        if len(self.arms) != m or len(self.strata) != m or len(self.death_index) != m:
            raise LatticeInvariantError("subject columns differ in length")
        if self.frail is not None and len(self.frail) != m:
            raise LatticeInvariantError("frailty column differs in length")
        if len(np.unique(self.ids)) != m:
            raise LatticeInvariantError("subject ids must be unique")
        if not np.isin(self.arms, ARMS).all():
            raise LatticeInvariantError("arms must be 0 or 1")
        if not np.isin(self.deaths, (0, 1)).all():
            raise LatticeInvariantError("death matrix must be binary")
        if np.any((self.death_index < NO_DEATH) | (self.death_index >= J)):
            raise LatticeInvariantError("actual death index outside 1..J")
        for array in (self.ids, self.arms, self.death_index, self.deaths):
            array.setflags(write=False)
        if self.frail is not None:
            self.frail.setflags(write=False)

    @property
    def m(self) -> int:
        return len(self.ids)

    @property
    def J(self) -> int:
        return len(self.times)

    @cached_property
    def stratum_labels(self) -> Tuple[str, ...]:
        return tuple(sorted(set(self.strata), key=stratum_sort_key))

    @cached_property
    def stratum_codes(self) -> np.ndarray:
        index = {label: k for k, label in enumerate(self.stratum_labels)}
        return np.fromiter((index[x] for x in self.strata), dtype=np.int64, count=self.m)

    def group_mask(self, group: str) -> np.ndarray:
        if group == "pooled":
            return np.ones(self.m, dtype=bool)
        if group in ("arm0", "arm1"):
            return self.arms == int(group[-1])
        raise ConfigError(f"unknown group {group!r}; expected one of {GROUPS}")

    def actual_deaths(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """dN(t_j): actual deaths at each event time."""
        k = self.death_index if mask is None else self.death_index[mask]
        return np.bincount(k[k != NO_DEATH], minlength=self.J).astype(np.int64)

    def world_deaths(self, mask: Optional[np.ndarray] = None) -> np.ndarray:
        """d_j: deaths (actual plus potential) in each possible world."""
        deaths = self.deaths if mask is None else self.deaths[mask]
        return deaths.sum(axis=0, dtype=np.int64)

    def violations(self) -> List[Tuple[int, int, str]]:
        """Cells breaking the coupling, as (subject id, 1-based world, reason)."""
        k = self.death_index
        worlds = np.arange(self.J)
        dying = k != NO_DEATH
        cells: List[Tuple[int, int, str]] = []

        before = dying[:, None] & (worlds[None, :] < k[:, None]) & (self.deaths == 1)
        for i, j in zip(*np.nonzero(before)):
            cells.append((int(self.ids[i]), int(j) + 1, "death in a world before the actual death"))

        rows = np.nonzero(dying)[0]
        missing = rows[self.deaths[rows, k[rows]] == 0]
        for i in missing:
            cells.append((int(self.ids[i]), int(k[i]) + 1, "actual death missing from its own world"))

        never = (~dying)[:, None] & (self.deaths == 1)
        for i, j in zip(*np.nonzero(never)):
            cells.append((int(self.ids[i]), int(j) + 1, "death of a subject who never dies"))
        return cells

    def validate(self) -> None:
        cells = self.violations()
        if cells:
            subject, world_index, reason = cells[0]
            raise LatticeInvariantError(
                f"{len(cells)} invalid lattice cell(s); first: subject {subject}, "
                f"world {world_index}: {reason}",
                cells=cells,
            )


@dataclass(frozen=True)
class PossibleWorld:
    index: int
    time: float
    death_set: Tuple[int, ...]
    deaths: int
    size: int
    deaths_by_arm: Dict[int, int]
    size_by_arm: Dict[int, int]

    @property
    def risk(self) -> float:
        return self.deaths / self.size

    def arm_risk(self, z: int) -> float:
        if self.size_by_arm.get(z, 0) == 0:
            raise ConfigError(f"arm {z} has no subjects")
        return self.deaths_by_arm[z] / self.size_by_arm[z]


@dataclass(frozen=True)
class RevivedWorld:
    """World j seen through the die-and-revive intervention at t_j-."""

    index: int
    time: float
    revived: Tuple[int, ...]
    revived_deaths: Tuple[int, ...]
    actual_deaths: Tuple[int, ...]

    @property
    def deaths(self) -> int:
        return len(self.revived_deaths) + len(self.actual_deaths)


@dataclass(frozen=True)
class GroupSummary:
    """Multiverse summary of one group (pooled or a single arm)."""

    group: str
    size: int
    n_worlds: int
    times: Tuple[float, ...]
    world_deaths: Tuple[int, ...]
    actual_deaths: Tuple[int, ...]
    cumulative: float
    average: float
    actual_risk: float
    average_le_risk: bool
    risk_le_cumulative: bool
    actual_le_world: Tuple[bool, ...]
    world_le_prior_deaths: Tuple[bool, ...]

    @property
    def holds(self) -> bool:
        return (
            self.average_le_risk
            and self.risk_le_cumulative
            and all(self.actual_le_world)
            and all(self.world_le_prior_deaths)
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "group": self.group,
            "size": self.size,
            "n_worlds": self.n_worlds,
            "cumulative": self.cumulative,
            "average": self.average,
            "actual_risk": self.actual_risk,
            "flags": {
                "average_le_risk": self.average_le_risk,
                "risk_le_cumulative": self.risk_le_cumulative,
                "actual_le_world": list(self.actual_le_world),
                "world_le_prior_deaths": list(self.world_le_prior_deaths),
            },
            "per_time": [
                {"time": t, "world_deaths": d, "actual_deaths": a}
                for t, d, a in zip(self.times, self.world_deaths, self.actual_deaths)
            ],
        }


@dataclass(frozen=True)
class MultiverseReport:
    tau: float
    n_worlds: int
    groups: Dict[str, GroupSummary]

    @property
    def holds(self) -> bool:
        return all(g.holds for g in self.groups.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tau": self.tau,
            "n_worlds": self.n_worlds,
            "bounds_hold": self.holds,
            "groups": {name: g.to_dict() for name, g in self.groups.items()},
        }


@dataclass(frozen=True)
class BoundsCheck:
    passed: bool
    invalid_cells: Tuple[Tuple[int, int, str], ...]
    failed_checks: Tuple[Tuple[float, str, str], ...] = field(default_factory=tuple)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "invalid_cells": [list(c) for c in self.invalid_cells],
            "failed_checks": [list(c) for c in self.failed_checks],
        }


@dataclass(frozen=True)
class OracleComparison:
    arm: int
    time: float
    world_risk: float
    standardized_world_risk: float
    icp_increment: float
    marginal_increment: float

    @property
    def discrepancy(self) -> float:
        return abs(self.standardized_world_risk - self.icp_increment)

    @property
    def marginal_discrepancy(self) -> float:
        return abs(self.standardized_world_risk - self.marginal_increment)


@dataclass(frozen=True)
class OracleReport:
    tolerance: float
    comparisons: Tuple[OracleComparison, ...]

    @property
    def max_discrepancy(self) -> float:
        return max((c.discrepancy for c in self.comparisons), default=0.0)

    @property
    def max_marginal_discrepancy(self) -> float:
        return max((c.marginal_discrepancy for c in self.comparisons), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_discrepancy": self.max_discrepancy,
            "max_marginal_discrepancy": self.max_marginal_discrepancy,
            "comparisons": [
                {
                    "arm": c.arm,
                    "time": c.time,
                    "world_risk": c.world_risk,
                    "standardized_world_risk": c.standardized_world_risk,
                    "icp_increment": c.icp_increment,
                    "marginal_increment": c.marginal_increment,
                    "discrepancy": c.discrepancy,
                }
                for c in self.comparisons
            ],
        }


def _check_world_index(lattice: PotentialOutcomeLattice, j: int) -> int:
    if not 1 <= j <= lattice.J:
        raise ConfigError(f"world index {j} out of range 1..{lattice.J}")
    return j - 1


def _worlds_up_to(lattice: PotentialOutcomeLattice, tau: float) -> int:
    n_worlds = int(np.searchsorted(np.asarray(lattice.times, dtype=float), tau, side="right"))
    if n_worlds == 0:
        raise ConfigError(f"tau={tau} precedes the first event time t_1={lattice.times[0]}")
    return n_worlds


def world(lattice: PotentialOutcomeLattice, j: int) -> PossibleWorld:
    """
    Extract the j-th possible world (1-based).

    Only column j of the death matrix is read; arm sizes are the full
    baseline sizes since nobody dies before t_j in world j.
    """
    col = _check_world_index(lattice, j)
    column = lattice.deaths[:, col]
    dead = column == 1
    return PossibleWorld(
        index=j,
        time=float(lattice.times[col]),
        death_set=tuple(int(i) for i in lattice.ids[dead]),
        deaths=int(dead.sum()),
        size=lattice.m,
        deaths_by_arm={z: int((dead & (lattice.arms == z)).sum()) for z in ARMS},
        size_by_arm={z: int((lattice.arms == z).sum()) for z in ARMS},
    )


def revive_world(lattice: PotentialOutcomeLattice, j: int) -> RevivedWorld:
    """World j built by reviving, at t_j-, everyone who died earlier in the actual world."""
    col = _check_world_index(lattice, j)
    k = lattice.death_index
    revived = (k != NO_DEATH) & (k < col)
    column = lattice.deaths[:, col] == 1
    return RevivedWorld(
        index=j,
        time=float(lattice.times[col]),
        revived=tuple(int(i) for i in lattice.ids[revived]),
        revived_deaths=tuple(int(i) for i in lattice.ids[revived & column]),
        actual_deaths=tuple(int(i) for i in lattice.ids[k == col]),
    )


def _summarize_group(
    lattice: PotentialOutcomeLattice, group: str, n_worlds: int
) -> Optional[GroupSummary]:
    mask = lattice.group_mask(group)
    size = int(mask.sum())
    if size == 0:
        return None
    world_deaths = lattice.world_deaths(mask)[:n_worlds]
    actual_deaths = lattice.actual_deaths(mask)[:n_worlds]
    total_world = int(world_deaths.sum())
    total_actual = int(actual_deaths.sum())
    cumulative = total_world / size
    return GroupSummary(
        group=group,
        size=size,
        n_worlds=n_worlds,
        times=tuple(float(t) for t in lattice.times[:n_worlds]),
        world_deaths=tuple(int(d) for d in world_deaths),
        actual_deaths=tuple(int(a) for a in actual_deaths),
        cumulative=cumulative,
        average=cumulative / n_worlds,
        actual_risk=total_actual / size,
        # integer forms of average <= F <= cumulative
        average_le_risk=total_world <= n_worlds * total_actual,
        risk_le_cumulative=total_actual <= total_world,
        actual_le_world=tuple(bool(v) for v in actual_deaths <= world_deaths),
        world_le_prior_deaths=tuple(bool(v) for v in world_deaths <= np.cumsum(actual_deaths)),
    )


def multiverse_summary(lattice: PotentialOutcomeLattice, tau: float) -> MultiverseReport:
    """
    Cumulative and average iCP hazard, actual risk and bound flags up to tau,
    pooled and per arm.
    """
    n_worlds = _worlds_up_to(lattice, tau)
    groups = {}
    for group in GROUPS:
        summary = _summarize_group(lattice, group, n_worlds)
        if summary is not None:
            groups[group] = summary
    return MultiverseReport(tau=float(tau), n_worlds=n_worlds, groups=groups)


def verify_bounds(lattice: PotentialOutcomeLattice, tau: Optional[float] = None) -> BoundsCheck:
    """
    Check the lattice coupling and the bound chain at ``tau``, or at every
    grid time when ``tau`` is None.

    A failure means the lattice was built wrongly: under the coupling the
    inequalities are theorems.
    """
    cells = lattice.violations()
    horizons: Sequence[float] = lattice.times if tau is None else (tau,)
    failed: List[Tuple[float, str, str]] = []
    for horizon in horizons:
        report = multiverse_summary(lattice, horizon)
        for name, g in report.groups.items():
            if not g.average_le_risk:
                failed.append((float(horizon), name, "average hazard exceeds actual risk"))
            if not g.risk_le_cumulative:
                failed.append((float(horizon), name, "actual risk exceeds cumulative hazard"))
            for t, ok in zip(g.times, g.actual_le_world):
                if not ok:
                    failed.append((t, name, "actual deaths exceed world deaths"))
            for t, ok in zip(g.times, g.world_le_prior_deaths):
                if not ok:
                    failed.append((t, name, "world deaths exceed actual deaths up to t_j"))
    passed = not cells and not failed
    if not passed:
        logger.warning(f"Bound verification failed: {len(cells)} invalid cell(s), {len(failed)} failed check(s)")
    return BoundsCheck(passed=passed, invalid_cells=tuple(cells), failed_checks=tuple(failed))


def actual_cohort(lattice: PotentialOutcomeLattice) -> Cohort:
    """The uncensored actual-world cohort: deaths at t_{k_i}, survivors censored at t_J."""
    k = lattice.death_index
    times = np.asarray(lattice.times, dtype=float)
    dying = k != NO_DEATH
    followup = np.where(dying, times[np.where(dying, k, 0)], times[-1])
    return Cohort.from_columns(
        ids=lattice.ids,
        arms=lattice.arms,
        strata=lattice.strata,
        times=followup,
        events=dying.astype(np.int64),
        declared_strata=lattice.stratum_labels,
    )


def _group_codes(lattice: PotentialOutcomeLattice, by: str) -> Tuple[np.ndarray, int]:
    if by == "stratum":
        return lattice.stratum_codes, len(lattice.stratum_labels)
    if by == "frailty":
        if lattice.frail is None:
            raise ConfigError("lattice carries no frailty classes")
        return lattice.frail.astype(np.int64), 2
    raise ConfigError(f"unknown grouping {by!r}; expected 'stratum' or 'frailty'")


def standardized_world_risk(
    lattice: PotentialOutcomeLattice, j: int, z: int, by: str = "stratum"
) -> float:
    """
    World-j risk of arm z standardized to the whole population:
    sum_g [d_j(z, g) / m_{z,g}] * m_g / m. A group absent from arm z
    contributes 0 but keeps its weight.
    """
    col = _check_world_index(lattice, j)
    codes, n_groups = _group_codes(lattice, by)
    in_arm = lattice.arms == z
    sizes = np.bincount(codes, minlength=n_groups)
    arm_sizes = np.bincount(codes[in_arm], minlength=n_groups)
    arm_deaths = np.bincount(codes[in_arm], weights=lattice.deaths[in_arm, col], minlength=n_groups)
    risks = np.divide(arm_deaths, arm_sizes, out=np.zeros(n_groups), where=arm_sizes > 0)
    return float(risks @ (sizes / lattice.m))


def estimator_oracle_check(lattice: PotentialOutcomeLattice, tolerance: float) -> OracleReport:
    """
    Compare world-j risks with the iCP estimate from the actual-world cohort.

    The reference is the world risk standardized over strata, which is the
    plain per-arm world risk d_j(z)/m_z for a single stratum. Discrepancies
    beyond ``tolerance`` are reported through ``passed``, never raised.
    A lattice without actual deaths has an empty event grid, so every
    estimated increment is 0.
    """
    table = build_risk_table(actual_cohort(lattice)) if np.any(lattice.death_index != NO_DEATH) else None
    grid_index = {} if table is None else {float(t): n for n, t in enumerate(table.times)}
    comparisons: List[OracleComparison] = []
    for z in ARMS:
        size = int((lattice.arms == z).sum())
        if size == 0:
            continue
        icp = np.zeros(0) if table is None else icp_hazard(table, z).increments
        marginal = np.zeros(0) if table is None else marginal_nelson_aalen(table, z).increments
        world_deaths = lattice.world_deaths(lattice.arms == z)
        for col, t in enumerate(lattice.times):
            n = grid_index.get(float(t))
            comparisons.append(
                OracleComparison(
                    arm=z,
                    time=float(t),
                    world_risk=float(world_deaths[col]) / size,
                    standardized_world_risk=standardized_world_risk(lattice, col + 1, z),
                    icp_increment=0.0 if n is None else float(icp[n]),
                    marginal_increment=0.0 if n is None else float(marginal[n]),
                )
            )
    report = OracleReport(tolerance=float(tolerance), comparisons=tuple(comparisons))
    logger.info(
        f"Oracle check: max |world risk - iCP| = {report.max_discrepancy:.4g} "
        f"(tolerance {tolerance}), passed={report.passed}"
    )
    return report


def write_lattice(lattice: PotentialOutcomeLattice, path: str) -> None:
    """CSV: id, arm, stratum, actual_death_index (1-based, empty for none), w1..wJ."""
    frame = pd.DataFrame(
        {
            "id": lattice.ids,
            "arm": lattice.arms,
            "stratum": list(lattice.strata),
            "actual_death_index": ["" if k == NO_DEATH else str(k + 1) for k in lattice.death_index],
        }
    )
    worlds = pd.DataFrame(
        lattice.deaths.astype(np.int64), columns=[f"w{j}" for j in range(1, lattice.J + 1)]
    )
    try:
        pd.concat([frame, worlds], axis=1).to_csv(path, index=False, encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"failed to write lattice file {path}: {e}")


def read_lattice(path: str, times: Optional[Sequence[float]] = None) -> PotentialOutcomeLattice:
    """
    Read a lattice CSV and check its coupling invariants.

    World times are not stored in the file; they default to 1..J.

    Raises:
        DataIOError: If the file cannot be read.
        ConfigError: If ``times`` does not match the number of worlds.
        LatticeInvariantError: On malformed values or coupling violations.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataIOError(f"lattice file not found: {path}")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise LatticeInvariantError(f"unparseable lattice file {path}: {e}")
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(f"failed to read lattice file {path}: {e}")

    required = ["id", "arm", "stratum", "actual_death_index"]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise LatticeInvariantError(f"missing lattice columns {missing}")
    world_columns = [c for c in frame.columns if c not in required]
    J = len(world_columns)
    if world_columns != [f"w{j}" for j in range(1, J + 1)]:
        raise LatticeInvariantError(f"world columns must be w1..wJ, got {world_columns}")
    if times is None:
        times = [float(j) for j in range(1, J + 1)]
    elif len(times) != J:
        raise ConfigError(f"{len(times)} world times given for {J} worlds")

    try:
        ids = frame["id"].astype(np.int64).to_numpy()
        arms = frame["arm"].astype(np.int64).to_numpy()
        # 1-based on disk, 0 marks a blank field
        raw_index = np.array(
            [0 if v.strip() == "" else int(v) for v in frame["actual_death_index"]], dtype=np.int64
        )
        blank = np.array([v.strip() == "" for v in frame["actual_death_index"]], dtype=bool)
        world_values = frame[world_columns].astype(np.int64).to_numpy()
    except ValueError as e:
        raise LatticeInvariantError(f"malformed lattice value: {e}")

    bad_index = ~blank & ((raw_index < 1) | (raw_index > J))
    if bad_index.any():
        cells = [
            (int(ids[n]), int(raw_index[n]), "actual_death_index outside 1..J") for n in np.flatnonzero(bad_index)
        ]
        raise LatticeInvariantError(f"actual_death_index outside 1..{J} for {len(cells)} subject(s)", cells)
    death_index = np.where(blank, NO_DEATH, raw_index - 1)
    non_binary = ~np.isin(world_values, (0, 1))
    if non_binary.any():
        rows, cols = np.nonzero(non_binary)
        cells = [
            (int(ids[r]), int(c) + 1, f"world value {int(world_values[r, c])} is not 0/1")
            for r, c in zip(rows, cols)
        ]
        raise LatticeInvariantError(f"{len(cells)} world cell(s) are not 0/1", cells)
    deaths = world_values.astype(np.uint8)

    lattice = PotentialOutcomeLattice(
        times=tuple(float(t) for t in times),
        ids=ids,
        arms=arms,
        strata=tuple(frame["stratum"].str.strip()),
        death_index=death_index,
        deaths=np.ascontiguousarray(deaths),
    )
    lattice.validate()
    logger.info(f"Loaded lattice from {path}: m={lattice.m}, J={lattice.J}")
    return lattice
