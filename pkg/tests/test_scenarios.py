"""
Monte-Carlo checks of the simulation scenarios against their known truth.
"""

import numpy as np
import pytest

from src.core_data import build_risk_table
from src.dgp import (
    Assignment,
    DGPConfig,
    generate_lattice,
    get_preset,
    observe,
    scenario_noncollapsible,
    scenario_selection_bias,
)
from src.estimators import cct_hazard, collapsibility_gap, icp_hazard, marginal_nelson_aalen, summarize
from src.multiverse import estimator_oracle_check, standardized_world_risk, verify_bounds


def observed_table(config, expose_frailty=False):
    lattice = generate_lattice(config)
    return lattice, build_risk_table(observe(lattice, config, expose_frailty=expose_frailty))


@pytest.fixture(scope="module")
def noncollapsible_run():
    config = scenario_noncollapsible()
    return observed_table(config)


@pytest.fixture(scope="module")
def selection_bias_run():
    return observed_table(scenario_selection_bias())


@pytest.mark.slow
class TestNonCollapsibility:
    """Depletion of the high-risk stratum pulls cCT below iCP."""

    def test_cct_gap_at_last_time(self, noncollapsible_run):
        """Test gap_cCT at the last time exceeds 0.01 while gap_iCP is exactly 0."""
        _, table = noncollapsible_run
        for z in (0, 1):
            gap = collapsibility_gap(table, z)
            assert abs(gap.cct[-1]) > 0.01
            assert np.all(gap.icp == 0.0)

    def test_cumulative_ordering(self, noncollapsible_run):
        """Test cumulative cCT stays below cumulative iCP at the last time."""
        _, table = noncollapsible_run
        tau = float(table.times[-1])
        for z in (0, 1):
            assert summarize(cct_hazard(table, z), tau).cumulative < summarize(icp_hazard(table, z), tau).cumulative

    def test_equal_hazards_close_the_gap(self):
        """Test equal stratum hazards leave gap_cCT within noise of 0."""
        _, table = observed_table(scenario_noncollapsible(high_risk_multiplier=1.0))
        for z in (0, 1):
            assert np.all(np.abs(collapsibility_gap(table, z).cct) < 0.01)


@pytest.mark.slow
class TestSelectionBias:
    """Frailty selection attenuates the marginal hazard ratio."""

    def test_marginal_ratio_attenuates(self, selection_bias_run):
        """Test the marginal ratio drifts toward 1 by more than 0.05."""
        _, table = selection_bias_run
        ratio = marginal_nelson_aalen(table, 1).increments / marginal_nelson_aalen(table, 0).increments
        assert ratio[-1] - ratio[0] > 0.05

    def test_class_adjusted_ratio_constant(self, selection_bias_run):
        """Test the frailty-standardized world risk ratio stays at 0.25 within 0.02."""
        lattice, _ = selection_bias_run
        for j in range(1, lattice.J + 1):
            treated = standardized_world_risk(lattice, j, 1, by="frailty")
            control = standardized_world_risk(lattice, j, 0, by="frailty")
            assert abs(treated / control - 0.25) < 0.02

    def test_adjusted_run_recovers_ratio(self):
        """Test iCP on the frailty-exposed cohort stays at the class ratio within 0.02."""
        _, table = observed_table(scenario_selection_bias(), expose_frailty=True)
        ratio = icp_hazard(table, 1).increments / icp_hazard(table, 0).increments
        assert np.all(np.abs(ratio - 0.25) < 0.02)

    def test_homogeneous_population_no_attenuation(self):
        """Test a frailty multiplier of 1 removes the drift."""
        _, table = observed_table(scenario_selection_bias(frailty_multiplier=1.0))
        ratio = marginal_nelson_aalen(table, 1).increments / marginal_nelson_aalen(table, 0).increments
        assert abs(ratio[-1] - ratio[0]) < 0.05


@pytest.mark.slow
class TestOracleAgreement:
    """The iCP estimate targets the world risks of the multiverse."""

    @pytest.mark.parametrize("seed", range(20))
    def test_randomized_constant(self, seed):
        """Test max |world risk - iCP| < 0.02 for h=0.1, m=10000, J=3."""
        lattice = generate_lattice(get_preset("randomized-constant", seed=seed))
        report = estimator_oracle_check(lattice, 0.02)
        assert report.passed, report.max_discrepancy

    def test_confounded_assignment(self):
        """Test stratified iCP matches world risks where the marginal estimate does not."""
        lattice = generate_lattice(get_preset("confounded", seed=1))
        report = estimator_oracle_check(lattice, 0.02)
        assert report.passed
        assert report.max_marginal_discrepancy > 0.02


@pytest.mark.slow
class TestBoundsOnSimulatedLattices:
    """The bound chain holds on every generated lattice."""

    def test_hundred_lattices(self):
        """Test 100 DGP lattices (m=2000, J=10) with zero violations."""
        J = 10
        config = DGPConfig(
            m=2000,
            times=tuple(float(t) for t in range(1, J + 1)),
            strata_probs={"A": 0.4, "B": 0.6},
            hazards={
                "A": {0: (0.05,) * J, 1: (0.03,) * J},
                "B": {0: (0.15,) * J, 1: (0.1,) * J},
            },
            assignment=Assignment("confounded", p_by_stratum={"A": 0.7, "B": 0.3}),
        )
        for seed in range(100):
            check = verify_bounds(generate_lattice(config.with_overrides(seed=seed)))
            assert check.passed, (seed, check.failed_checks[:3])
