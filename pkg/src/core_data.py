"""
Observed-Data Model

Subjects, cohorts and risk tables for discrete-time survival data. A cohort
holds one record per subject (arm, stratum, follow-up time, event indicator);
the risk table aggregates it into the per (time, arm, stratum) event and
at-risk counts every hazard estimator consumes.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import CohortError, ConfigError, DataIOError

logger = logging.getLogger(__name__)

ARMS = (0, 1)
CANONICAL_COLUMNS = ("id", "arm", "stratum", "time", "event")


def stratum_sort_key(label: str) -> Tuple[int, float, str]:
    """Order numeric labels numerically, then everything else lexicographically."""
    try:
        return (0, float(int(label)), "")
    except ValueError:
        return (1, 0.0, label)


@dataclass(frozen=True)
class SubjectRecord:
    """One subject of the actual world: Z, X and the fused (T, C) observation."""

    id: int
    arm: int
    stratum: str
    followup_time: float
    event: int

    def __post_init__(self) -> None:
        if self.id < 0:
            raise CohortError(f"subject id must be non-negative, got {self.id}")
        if self.arm not in ARMS:
            raise CohortError(f"non-binary arm {self.arm!r} for subject {self.id}")
        if self.event not in (0, 1):
            raise CohortError(f"non-binary event {self.event!r} for subject {self.id}")
        if not math.isfinite(self.followup_time) or self.followup_time <= 0:
            raise CohortError(
                f"non-positive time {self.followup_time!r} for subject {self.id}"
            )
        if self.stratum == "":
            raise CohortError(f"empty stratum label for subject {self.id}")


@dataclass(frozen=True)
class ColumnSchema:
    """Maps the canonical cohort columns onto the headers of a CSV file."""

    id: str = "id"
    arm: str = "arm"
    stratum: str = "stratum"
    time: str = "time"
    event: str = "event"

    def header_for(self, column: str) -> str:
        return str(getattr(self, column))

    def rename_map(self) -> Dict[str, str]:
        """File header -> canonical column name."""
        return {self.header_for(c): c for c in CANONICAL_COLUMNS}


@dataclass(frozen=True)
class Cohort:
    """
    Observed survival data for m subjects.

    ``strata`` is the declared stratum set; ``grid`` holds the distinct event
    times t_1 < ... < t_J. Both are derived by :meth:`from_records` and
    validated on construction.
    """

    records: Tuple[SubjectRecord, ...]
    strata: Tuple[str, ...]
    grid: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.records:
            raise CohortError("empty cohort")
        ids = self.ids
        if len(np.unique(ids)) != len(ids):
            values, counts = np.unique(ids, return_counts=True)
            raise CohortError(f"duplicate id {int(values[counts > 1][0])}")
        unknown = set(r.stratum for r in self.records) - set(self.strata)
        if unknown:
            raise CohortError(f"stratum labels {sorted(unknown)} not declared in cohort strata")
        if not self.grid:
            raise CohortError("empty event grid: no record has event=1")
        grid = np.asarray(self.grid, dtype=float)
        if np.any(np.diff(grid) <= 0):
            raise CohortError("event grid must be strictly increasing")
        event_times = np.unique(self.times[self.events == 1])
        if not np.array_equal(event_times, grid):
            raise CohortError("event grid must be exactly the distinct observed event times")

    @classmethod
    def from_records(
        cls, records: Iterable[SubjectRecord], strata: Optional[Sequence[str]] = None
    ) -> "Cohort":
        """Build a cohort, deriving the stratum set and the event grid."""
        records = tuple(records)
        if not records:
            raise CohortError("empty cohort")
        if strata is None:
            strata = sorted({r.stratum for r in records}, key=stratum_sort_key)
        grid = sorted({r.followup_time for r in records if r.event == 1})
        if not grid:
            raise CohortError("empty event grid: no record has event=1")
        return cls(records=records, strata=tuple(strata), grid=tuple(grid))

    @classmethod
    def from_columns(
        cls,
        ids: Sequence[int],
        arms: Sequence[int],
        strata: Sequence[str],
        times: Sequence[float],
        events: Sequence[int],
        declared_strata: Optional[Sequence[str]] = None,
    ) -> "Cohort":
        """Build a cohort from parallel columns (used by the data-generating process)."""
        lengths = {len(ids), len(arms), len(strata), len(times), len(events)}
        if len(lengths) != 1:
            raise CohortError(f"column lengths differ: {sorted(lengths)}")
        records = [
            SubjectRecord(
                id=int(i), arm=int(z), stratum=str(x), followup_time=float(t), event=int(e)
            )
            for i, z, x, t, e in zip(ids, arms, strata, times, events)
        ]
        return cls.from_records(records, strata=declared_strata)

    @property
    def m(self) -> int:
        return len(self.records)

    @property
    def J(self) -> int:
        return len(self.grid)

    @cached_property
    def ids(self) -> np.ndarray:
        return np.fromiter((r.id for r in self.records), dtype=np.int64, count=self.m)

    @cached_property
    def arms(self) -> np.ndarray:
        return np.fromiter((r.arm for r in self.records), dtype=np.int64, count=self.m)

    @cached_property
    def times(self) -> np.ndarray:
        return np.fromiter((r.followup_time for r in self.records), dtype=float, count=self.m)

    @cached_property
    def events(self) -> np.ndarray:
        return np.fromiter((r.event for r in self.records), dtype=np.int64, count=self.m)

    @cached_property
    def stratum_codes(self) -> np.ndarray:
        """Index of each record's stratum within ``strata``."""
        index = {label: k for k, label in enumerate(self.strata)}
        return np.fromiter((index[r.stratum] for r in self.records), dtype=np.int64, count=self.m)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "id": self.ids,
                "arm": self.arms,
                "stratum": [r.stratum for r in self.records],
                "time": self.times,
                "event": self.events,
            }
        )


@dataclass(frozen=True, eq=False)
class RiskTable:
    """
    Event and at-risk counts per (t_j, z, x).

    Arrays are indexed ``[j, z, x]`` with ``x`` the position of the stratum in
    ``strata``. ``stratum_sizes[x]`` counts the stratum over both arms.
    """

    times: np.ndarray
    strata: Tuple[str, ...]
    events: np.ndarray
    at_risk: np.ndarray
    stratum_sizes: np.ndarray
    _index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        for array in (self.times, self.events, self.at_risk, self.stratum_sizes):
            array.setflags(write=False)
        object.__setattr__(self, "_index", {label: k for k, label in enumerate(self.strata)})

    @property
    def m(self) -> int:
        return int(self.stratum_sizes.sum())

    @property
    def J(self) -> int:
        return len(self.times)

    @property
    def stratum_weights(self) -> np.ndarray:
        """m_x / m for every stratum."""
        return self.stratum_sizes / self.m

    def stratum_index(self, stratum: str) -> int:
        try:
            return self._index[str(stratum)]
        except KeyError:
            raise ConfigError(f"unknown stratum label {stratum!r}; known: {list(self.strata)}")

    def cell(self, j: int, z: int, stratum: str) -> Tuple[int, int]:
        """(d, r) at grid index j (0-based) for arm z and the given stratum."""
        x = self.stratum_index(stratum)
        return int(self.events[j, z, x]), int(self.at_risk[j, z, x])

    def to_frame(self) -> pd.DataFrame:
        rows: List[Dict[str, object]] = []
        for j, t in enumerate(self.times):
            for z in ARMS:
                for x, label in enumerate(self.strata):
                    rows.append(
                        {
                            "time": float(t),
                            "arm": z,
                            "stratum": label,
                            "events": int(self.events[j, z, x]),
                            "at_risk": int(self.at_risk[j, z, x]),
                        }
                    )
        return pd.DataFrame(rows)


def _parse_row(row: Dict[str, str], line: int) -> SubjectRecord:
    try:
        subject_id = int(row["id"])
    except ValueError:
        raise CohortError(f"malformed id {row['id']!r}", line=line)
    try:
        arm = int(row["arm"])
    except ValueError:
        raise CohortError(f"non-binary arm {row['arm']!r}", line=line)
    try:
        event = int(row["event"])
    except ValueError:
        raise CohortError(f"non-binary event {row['event']!r}", line=line)
    try:
        time = float(row["time"])
    except ValueError:
        raise CohortError(f"malformed time {row['time']!r}", line=line)
    try:
        return SubjectRecord(
            id=subject_id,
            arm=arm,
            stratum=row["stratum"].strip(),
            followup_time=time,
            event=event,
        )
    except CohortError as e:
        raise CohortError(str(e), line=line)


def load_cohort(path: str, schema: Optional[ColumnSchema] = None) -> Cohort:
    """
    Read a cohort CSV (header row, UTF-8, comma-delimited).

    Args:
        path: Location of the CSV file.
        schema: Column remapping; canonical names are used when omitted.

    Returns:
        The validated cohort with its derived strata and event grid.

    Raises:
        DataIOError: If the file cannot be read.
        CohortError: On malformed rows (with line number), duplicate ids,
            an empty cohort or an empty event grid.
    """
    schema = schema or ColumnSchema()
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError:
        raise DataIOError(f"cohort file not found: {path}")
    except pd.errors.EmptyDataError:
        raise CohortError("empty cohort")
    except pd.errors.ParserError as e:
        raise CohortError(f"unparseable cohort file: {e}")
    except (OSError, UnicodeDecodeError) as e:
        raise DataIOError(f"failed to read cohort file {path}: {e}")

    missing = [schema.header_for(c) for c in CANONICAL_COLUMNS if schema.header_for(c) not in frame.columns]
    if missing:
        raise CohortError(f"missing columns {missing} in {path}")
    frame = frame.rename(columns=schema.rename_map())[list(CANONICAL_COLUMNS)]
    if frame.empty:
        raise CohortError("empty cohort")

    records: List[SubjectRecord] = []
    seen: Dict[int, int] = {}
    for offset, row in enumerate(frame.to_dict(orient="records")):
        line = offset + 2
        record = _parse_row(row, line)
        if record.id in seen:
            raise CohortError(f"duplicate id {record.id} (first seen on line {seen[record.id]})", line=line)
        seen[record.id] = line
        records.append(record)

    cohort = Cohort.from_records(records)
    logger.info(f"Loaded cohort from {path}: m={cohort.m}, J={cohort.J}, strata={list(cohort.strata)}")
    return cohort


def write_cohort(cohort: Cohort, path: str) -> None:
    """Write a cohort in the canonical CSV layout."""
    try:
        cohort.to_frame().to_csv(path, index=False, encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"failed to write cohort file {path}: {e}")


def build_risk_table(cohort: Cohort) -> RiskTable:
    """
    Aggregate a cohort into d(t_j, z, x) and r(t_j, z, x).

    A record is at risk at t_j when its follow-up time is >= t_j, so a
    censoring tied with an event time still counts in that risk set.
    """
    grid = np.asarray(cohort.grid, dtype=float)
    n_strata = len(cohort.strata)
    arms = cohort.arms
    codes = cohort.stratum_codes
    times = cohort.times

    # number of grid times each record is at risk for
    steps = np.searchsorted(grid, times, side="right")
    exits = np.zeros((len(grid) + 1, 2, n_strata), dtype=np.int64)
    np.add.at(exits, (steps, arms, codes), 1)
    at_risk = exits[::-1].cumsum(axis=0)[::-1][1:]

    died = cohort.events == 1
    events = np.zeros((len(grid), 2, n_strata), dtype=np.int64)
    np.add.at(events, (np.searchsorted(grid, times[died]), arms[died], codes[died]), 1)

    sizes = np.bincount(codes, minlength=n_strata).astype(np.int64)
    logger.debug(f"Built risk table: J={len(grid)}, strata={n_strata}, m={cohort.m}")
    return RiskTable(
        times=grid,
        strata=cohort.strata,
        events=events,
        at_risk=np.ascontiguousarray(at_risk),
        stratum_sizes=sizes,
    )
