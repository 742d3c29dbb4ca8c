"""
Pytest configuration and shared fixtures for the Multiverse Hazard Toolkit tests.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from src.core_data import build_risk_table, load_cohort
from src.dgp import get_preset
from src.multihaz_system import MultiverseHazardToolkit
from src.multiverse import NO_DEATH, PotentialOutcomeLattice


E1_CSV = """id,arm,stratum,time,event
1,1,A,1,1
2,1,A,3,0
3,1,B,2,1
4,1,B,3,0
5,0,A,2,1
6,0,A,3,0
7,0,B,1,1
8,0,B,3,0
"""


def make_lattice(deaths, death_index, arms=None, strata=None, times=None, frail=None):
    """Build a lattice from plain lists; ``death_index`` is 1-based with None for no death."""
    deaths = np.asarray(deaths, dtype=np.uint8)
    m, J = deaths.shape
    return PotentialOutcomeLattice(
        times=tuple(float(t) for t in (times or range(1, J + 1))),
        ids=np.arange(1, m + 1, dtype=np.int64),
        arms=np.asarray(arms if arms is not None else [0] * m, dtype=np.int64),
        strata=tuple(strata or ["0"] * m),
        death_index=np.array([NO_DEATH if k is None else k - 1 for k in death_index], dtype=np.int64),
        deaths=deaths,
        frail=None if frail is None else np.asarray(frail, dtype=bool),
    )


@pytest.fixture
def e1_csv(tmp_path):
    """The eight-subject golden cohort written to disk."""
    path = tmp_path / "e1.csv"
    path.write_text(E1_CSV, encoding="utf-8")
    return str(path)


@pytest.fixture
def e1_cohort(e1_csv):
    return load_cohort(e1_csv)


@pytest.fixture
def e1_table(e1_cohort):
    return build_risk_table(e1_cohort)


@pytest.fixture
def three_subject_lattice():
    """D=[[1,1],[0,1],[0,0]] with actual deaths at worlds 1, 2 and none."""
    return make_lattice(
        deaths=[[1, 1], [0, 1], [0, 0]],
        death_index=[1, 2, None],
        arms=[1, 0, 1],
    )


@pytest.fixture
def small_config():
    """Default preset shrunk for quick runs."""
    return get_preset("default", m=200, seed=3)


@pytest.fixture
def clean_env(monkeypatch):
    """Remove toolkit environment variables so defaults apply."""
    for name in ("MULTIHAZ_SEED", "MULTIHAZ_TOLERANCE", "MULTIHAZ_WORKERS"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def toolkit(clean_env):
    return MultiverseHazardToolkit(workers=2)
