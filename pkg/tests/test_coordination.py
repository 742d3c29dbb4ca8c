"""
Unit tests for seed sweeps and run manifests (src/coordination).
"""

import json
import time

import pytest

from src.coordination.run_manifest import ManifestRecorder, RunManifest, config_digest, load_manifest
from src.coordination.sweep_coordinator import SeedResult, SweepCoordinator, TaskStatus
from src.errors import DataIOError


@pytest.mark.unit
class TestSweepCoordinator:
    """Test cases for running one job per seed."""

    def test_results_ordered_by_seed_list(self):
        """Test results follow the given seed order, not finish order."""
        def job(seed):
            time.sleep(0.01 * (5 - seed))
            return seed * 10

        coordinator = SweepCoordinator(max_workers=4)
        results = coordinator.run_sweep(job, [0, 1, 2, 3, 4])
        assert [r.seed for r in results] == [0, 1, 2, 3, 4]
        assert [r.result for r in results] == [0, 10, 20, 30, 40]
        assert all(r.status is TaskStatus.COMPLETED for r in results)

    def test_failures_are_captured(self):
        """Test a failing seed is recorded without stopping the sweep."""
        def job(seed):
            if seed == 2:
                raise ValueError("boom")
            return seed

        coordinator = SweepCoordinator(max_workers=2)
        results = coordinator.run_sweep(job, [1, 2, 3])
        failed = [r for r in results if not r.ok]
        assert len(failed) == 1
        assert failed[0].seed == 2
        assert failed[0].error == "boom"
        assert coordinator.status[2] is TaskStatus.FAILED

    def test_sweep_summary(self):
        """Test the summary counts completed and failed seeds."""
        coordinator = SweepCoordinator(max_workers=2)
        coordinator.run_sweep(lambda s: 1 / s, [0, 1, 2])
        summary = coordinator.get_sweep_summary()
        assert summary["total_seeds"] == 3
        assert summary["completed_seeds"] == 2
        assert summary["failed_seeds"] == 1
        assert summary["success_rate"] == pytest.approx(2 / 3)

    def test_empty_summary(self):
        """Test an unused coordinator reports zeros."""
        summary = SweepCoordinator().get_sweep_summary()
        assert summary["total_seeds"] == 0
        assert summary["avg_execution_time"] == 0.0

    def test_duplicate_seeds(self):
        """Test duplicate seeds are rejected."""
        with pytest.raises(ValueError, match="duplicate seeds"):
            SweepCoordinator().run_sweep(lambda s: s, [1, 1])

    def test_seed_result_dict(self):
        """Test the serialized form carries the status value."""
        result = SeedResult(seed=3, status=TaskStatus.COMPLETED, result=None, execution_time=0.5)
        assert result.to_dict() == {"seed": 3, "status": "completed", "execution_time": 0.5, "error": None}


@pytest.mark.unit
class TestRunManifest:
    """Test cases for manifest recording and loading."""

    def test_digest_is_order_independent(self):
        """Test the config digest ignores key order."""
        assert config_digest({"a": 1, "b": [1, 2]}) == config_digest({"b": [1, 2], "a": 1})
        assert config_digest({"a": 1}) != config_digest({"a": 2})

    def test_record_and_load(self, tmp_path):
        """Test a written manifest loads back with its inputs and outputs."""
        recorder = ManifestRecorder("simulate", seed=7, config={"m": 10})
        recorder.add_input("preset", "default")
        recorder.add_output("lattice.csv")
        recorder.add_output("lattice.csv")
        path = str(tmp_path / "manifest.json")
        written = recorder.write(path)

        loaded = load_manifest(path)
        assert loaded == written
        assert loaded.outputs == ["lattice.csv"]
        assert loaded.config_digest == config_digest({"m": 10})
        assert loaded.package_version == "1.0.0"
        assert loaded.duration_seconds >= 0

    def test_tampered_config_detected(self, tmp_path):
        """Test a manifest whose config no longer matches its digest is rejected."""
        path = tmp_path / "manifest.json"
        ManifestRecorder("simulate", seed=1, config={"m": 10}).write(str(path))
        payload = json.loads(path.read_text(encoding="utf-8"))
        payload["config"]["m"] = 11
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(DataIOError, match="digest"):
            load_manifest(str(path))

    def test_unparsable_manifest(self, tmp_path):
        """Test a manifest that is not JSON is an I/O error."""
        path = tmp_path / "manifest.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(DataIOError, match="malformed JSON"):
            load_manifest(str(path))

    def test_malformed_manifest(self, tmp_path):
        """Test unknown fields are reported as I/O errors."""
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"command": "x"}), encoding="utf-8")
        with pytest.raises(DataIOError, match="malformed manifest"):
            load_manifest(str(path))

    def test_manifest_without_config(self):
        """Test commands without a config record no digest."""
        manifest = ManifestRecorder("estimate").finish()
        assert isinstance(manifest, RunManifest)
        assert manifest.config is None and manifest.config_digest is None
