"""
Unit tests for the MultiverseHazardToolkit command facade.
"""

import json
import os

import pandas as pd
import pytest

from src.dgp import DGPConfig, get_preset, save_config
from src.errors import ConfigError
from src.multihaz_system import MultiverseHazardToolkit, parse_kinds, parse_seeds
from src.multiverse import write_lattice


def single_time_config(m=100):
    return DGPConfig(
        m=m,
        times=(1.0,),
        strata_probs={"0": 1.0},
        hazards={"0": {0: (0.2,), 1: (0.3,)}},
        name="single-time",
    )


@pytest.mark.unit
class TestToolkitInitialization:
    """Test cases for settings resolution."""

    def test_defaults(self, toolkit):
        """Test built-in defaults apply without environment."""
        assert toolkit.seed == 0
        assert toolkit.tolerance == 0.02
        assert toolkit.workers == 2

    def test_environment(self, clean_env, monkeypatch):
        """Test environment variables are read."""
        monkeypatch.setenv("MULTIHAZ_SEED", "42")
        monkeypatch.setenv("MULTIHAZ_TOLERANCE", "0.05")
        monkeypatch.setenv("MULTIHAZ_WORKERS", "3")
        toolkit = MultiverseHazardToolkit()
        assert (toolkit.seed, toolkit.tolerance, toolkit.workers) == (42, 0.05, 3)

    def test_explicit_overrides_environment(self, clean_env, monkeypatch):
        """Test arguments take precedence over the environment."""
        monkeypatch.setenv("MULTIHAZ_SEED", "42")
        assert MultiverseHazardToolkit(seed=1).seed == 1

    def test_unparsable_environment(self, clean_env, monkeypatch):
        """Test malformed variables are named in the error."""
        monkeypatch.setenv("MULTIHAZ_SEED", "abc")
        with pytest.raises(ConfigError, match="MULTIHAZ_SEED"):
            MultiverseHazardToolkit()

    def test_invalid_workers(self, clean_env):
        """Test at least one worker is required."""
        with pytest.raises(ConfigError, match="workers"):
            MultiverseHazardToolkit(workers=0)

    def test_system_info(self, toolkit):
        """Test system info lists the estimands."""
        info = toolkit.get_system_info()
        assert info["version"] == "1.0.0"
        assert info["estimands"] == ["marginal", "cct", "icp", "conditional"]


@pytest.mark.unit
class TestArgumentHelpers:
    """Test cases for kind and seed parsing."""

    def test_kinds_all(self):
        """Test 'all' expands to marginal, cct and icp."""
        assert parse_kinds("all") == ["marginal", "cct", "icp"]

    def test_kinds_list(self):
        """Test comma lists are normalized and deduplicated."""
        assert parse_kinds("ICP, cct,icp") == ["icp", "cct"]

    def test_kinds_empty(self):
        """Test an empty list is a usage error."""
        with pytest.raises(ConfigError, match="at least one"):
            parse_kinds("")

    def test_kinds_unknown(self):
        """Test unknown kinds are rejected."""
        with pytest.raises(ConfigError, match="unknown kind"):
            parse_kinds("icp,hr")

    def test_seed_count(self):
        """Test a count expands from the base seed."""
        assert parse_seeds("3", base=10) == [10, 11, 12]

    def test_seed_list(self):
        """Test comma lists are taken as given."""
        assert parse_seeds("5,1,9") == [5, 1, 9]

    @pytest.mark.parametrize("text", ["0", "x", "1,1", "-2,3"])
    def test_bad_seeds(self, text):
        """Test invalid seed specifications."""
        with pytest.raises(ConfigError):
            parse_seeds(text)


@pytest.mark.unit
class TestResolveConfig:
    """Test cases for choosing the DGP config."""

    def test_default_preset_uses_toolkit_seed(self, clean_env):
        """Test the fallback seed reaches the preset."""
        config = MultiverseHazardToolkit(seed=9).resolve_config()
        assert config.name == "default"
        assert config.seed == 9

    def test_config_file_with_overrides(self, toolkit, tmp_path):
        """Test m and seed override a config file."""
        path = str(tmp_path / "config.json")
        save_config(get_preset("confounded"), path)
        config = toolkit.resolve_config(config_path=path, m=50, seed=3)
        assert (config.name, config.m, config.seed) == ("confounded", 50, 3)

    def test_config_file_without_seed_uses_environment(self, clean_env, monkeypatch, tmp_path):
        """Test MULTIHAZ_SEED fills a config file that names no seed."""
        monkeypatch.setenv("MULTIHAZ_SEED", "21")
        data = get_preset("default", m=50).to_dict()
        del data["seed"]
        path = tmp_path / "config.json"
        path.write_text(json.dumps(data), encoding="utf-8")
        toolkit = MultiverseHazardToolkit()
        assert toolkit.resolve_config(config_path=str(path)).seed == 21
        assert toolkit.resolve_config(config_path=str(path), seed=4).seed == 4

    def test_config_and_preset_exclusive(self, toolkit):
        """Test a file and a preset cannot both be given."""
        with pytest.raises(ConfigError, match="mutually exclusive"):
            toolkit.resolve_config(config_path="x.json", preset="default")


@pytest.mark.unit
class TestToolkitCommands:
    """Test cases for simulate, estimate, multiverse and verify."""

    def test_simulate_writes_files(self, toolkit, small_config, tmp_path):
        """Test simulate writes lattice, cohort and manifest."""
        out = str(tmp_path / "sim")
        results = toolkit.simulate(small_config, out)
        for name in ("lattice.csv", "cohort.csv", "manifest.json"):
            assert os.path.exists(os.path.join(out, name))
        assert results["m"] == 200
        assert results["observed_events"] == results["actual_deaths"]

    def test_simulate_is_deterministic(self, toolkit, small_config, tmp_path):
        """Test re-running gives byte-identical lattice and cohort files."""
        a = toolkit.simulate(small_config, str(tmp_path / "a"))
        b = toolkit.simulate(small_config, str(tmp_path / "b"))
        for key in ("lattice_path", "cohort_path"):
            with open(a[key], "rb") as fa, open(b[key], "rb") as fb:
                assert fa.read() == fb.read()

    def test_replay_from_manifest(self, toolkit, small_config, tmp_path):
        """Test the manifest config reproduces the run."""
        first = toolkit.simulate(small_config, str(tmp_path / "first"))
        replayed = toolkit.config_from_manifest(first["manifest_path"])
        assert replayed == small_config

    def test_estimate_e1(self, toolkit, e1_csv, tmp_path):
        """Test the iCP arm-1 curve and summary of the golden cohort."""
        out = str(tmp_path / "est")
        summary = toolkit.estimate(e1_csv, out, arms=(1,), kinds=["icp"])
        frame = pd.read_csv(os.path.join(out, "curve_icp_arm1.csv"))
        assert frame["increment"].tolist() == pytest.approx([0.25, 0.25])
        assert summary["curves"][0]["summary"]["cumulative"] == pytest.approx(0.5)
        assert summary["actual_risk"]["arm1"]["value"] == pytest.approx(0.5)
        assert summary["tau"] == 2.0

    def test_estimate_single_stratum_curves_identical(self, toolkit, tmp_path):
        """Test all kinds agree on a single-stratum cohort."""
        path = tmp_path / "one.csv"
        path.write_text("id,arm,stratum,time,event\n1,1,A,1,1\n2,1,A,2,1\n3,1,A,3,0\n4,0,A,2,1\n", encoding="utf-8")
        summary = toolkit.estimate(str(path), str(tmp_path / "est"), kinds=["marginal", "cct", "icp"])
        arm1 = [c["increments"] for c in summary["curves"] if c["arm"] == 1]
        assert len(arm1) == 3
        assert arm1[0] == pytest.approx(arm1[1]) and arm1[1] == pytest.approx(arm1[2])
        assert summary["collapsibility_gap"] == {}

    def test_estimate_conditional_per_stratum(self, toolkit, e1_csv, tmp_path):
        """Test conditional curves are written per stratum."""
        out = str(tmp_path / "est")
        toolkit.estimate(e1_csv, out, arms=(1,), kinds=["conditional"])
        assert os.path.exists(os.path.join(out, "curve_conditional_arm1_A.csv"))
        assert os.path.exists(os.path.join(out, "curve_conditional_arm1_B.csv"))

    def test_estimate_censored_actual_risk(self, toolkit, e1_csv, tmp_path):
        """Test censoring before tau leaves the actual risk undefined."""
        summary = toolkit.estimate(e1_csv, str(tmp_path / "est"), tau=3.5)
        assert summary["actual_risk"]["arm1"]["value"] is None
        assert "censoring" in summary["actual_risk"]["arm1"]["reason"]

    def test_estimate_tau_before_first_time(self, toolkit, e1_csv, tmp_path):
        """Test tau before t_1 is a config error."""
        with pytest.raises(ConfigError, match="precedes"):
            toolkit.estimate(e1_csv, str(tmp_path / "est"), tau=0.5)

    def test_estimate_contrasts(self, toolkit, e1_csv, tmp_path):
        """Test both arms produce a contrast per kind."""
        summary = toolkit.estimate(e1_csv, str(tmp_path / "est"))
        assert set(summary["contrasts"]) == {"marginal", "cct", "icp"}

    def test_multiverse_report(self, toolkit, three_subject_lattice, tmp_path):
        """Test the report of the three-subject lattice."""
        path = str(tmp_path / "lattice.csv")
        write_lattice(three_subject_lattice, path)
        payload = toolkit.multiverse(path, str(tmp_path / "mv"))
        pooled = payload["groups"]["pooled"]
        assert pooled["cumulative"] == pytest.approx(1.0)
        assert pooled["average"] == pytest.approx(0.5)
        assert pooled["actual_risk"] == pytest.approx(2 / 3)
        assert payload["bounds"]["passed"] is True
        with open(os.path.join(str(tmp_path / "mv"), "multiverse_report.json"), encoding="utf-8") as f:
            assert json.load(f)["bounds_hold"] is True

    def test_verify_passes(self, toolkit, small_config, tmp_path):
        """Test a small sweep passes with a generous tolerance."""
        out = str(tmp_path / "verify")
        summary = toolkit.verify(small_config, [1, 2, 3], tolerance=0.2, out_dir=out)
        assert summary["passed"]
        assert [s["seed"] for s in summary["seeds"]] == [1, 2, 3]
        assert os.path.exists(os.path.join(out, "verify_report.json"))

    def test_verify_zero_tolerance(self, toolkit, small_config):
        """Test tolerance 0 fails the oracle while bounds still pass."""
        summary = toolkit.verify(small_config, [1, 2], tolerance=0.0)
        assert not summary["passed"]
        assert summary["bounds_passed"]
        assert not summary["oracle_passed"]

    def test_verify_without_deaths(self, toolkit):
        """Test a zero-hazard config verifies with zero discrepancy."""
        config = DGPConfig(
            m=50,
            times=(1.0, 2.0),
            strata_probs={"A": 0.5, "B": 0.5},
            hazards={"A": {0: (0.0, 0.0), 1: (0.0, 0.0)}, "B": {0: (0.0, 0.0), 1: (0.0, 0.0)}},
        )
        summary = toolkit.verify(config, [0, 1], tolerance=0.0)
        assert summary["passed"]
        assert summary["max_discrepancy"] == 0.0

    def test_verify_single_time_equality(self, toolkit):
        """Test J=1 runs assert Lambda = average = F exactly."""
        summary = toolkit.verify(single_time_config(), [0, 1], tolerance=1.0)
        assert summary["passed"]
        assert all(s["equality_passed"] is True for s in summary["seeds"])
