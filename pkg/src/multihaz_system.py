"""
Multiverse Hazard Toolkit

Ties cohort ingestion, simulation, estimation, multiverse construction and
verification into reproducible runs. Every command writes its artifacts and
a manifest.json into an output directory.
"""

import logging
import os
import re
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

import numpy as np
from dotenv import load_dotenv

from . import __version__
from .coordination.run_manifest import MANIFEST_NAME, ManifestRecorder, load_manifest
from .coordination.sweep_coordinator import SweepCoordinator
from .core_data import ARMS, ColumnSchema, RiskTable, build_risk_table, load_cohort, write_cohort
from .dgp import DGPConfig, generate_lattice, get_preset, load_config, observe
from .errors import CensoredRiskError, CohortError, ConfigError, DataIOError
from .estimators import EstimandKind, actual_risk, collapsibility_gap, get_estimator, hazard_contrast, summarize
from .estimators.curve_io import curve_to_dict, write_curve_csv
from .jsonio import write_json
from .multiverse import (
    estimator_oracle_check,
    multiverse_summary,
    read_lattice,
    verify_bounds,
    write_lattice,
)

logger = logging.getLogger(__name__)

T = TypeVar("T")

ALL_KINDS = ("marginal", "cct", "icp")
COLLAPSIBILITY_TOLERANCE = 1e-12


def _env_value(name: str, default: T, cast: Callable[[str], T]) -> T:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return cast(raw.strip())
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}")


def parse_kinds(kinds: str) -> List[str]:
    """Comma list of estimand kinds, or ``all`` for marginal, cct and icp."""
    names = [k.strip().lower() for k in (kinds or "").split(",") if k.strip()]
    if not names:
        raise ConfigError("--kinds: at least one estimand kind is required")
    if names == ["all"]:
        return list(ALL_KINDS)
    known = {k.value for k in EstimandKind}
    unknown = [k for k in names if k not in known]
    if unknown:
        raise ConfigError(f"--kinds: unknown kind(s) {unknown}; expected {sorted(known)} or 'all'")
    return list(dict.fromkeys(names))


def parse_seeds(seeds: str, base: int = 0) -> List[int]:
    """
    ``N`` means the N seeds base..base+N-1; a comma list is taken as given.
    """
    text = (seeds or "").strip()
    try:
        if "," in text:
            values = [int(s) for s in text.split(",") if s.strip()]
        else:
            count = int(text)
            if count < 1:
                raise ConfigError(f"--seeds: count must be positive, got {count}")
            values = list(range(base, base + count))
    except ValueError:
        raise ConfigError(f"--seeds: expected a count or a comma list of integers, got {seeds!r}")
    if not values or any(v < 0 for v in values):
        raise ConfigError(f"--seeds: seeds must be non-negative integers, got {seeds!r}")
    if len(set(values)) != len(values):
        raise ConfigError(f"--seeds: duplicate seeds in {seeds!r}")
    return values


def _ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"cannot create output directory {path}: {e}")
    return path


def _file_label(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", text)


class MultiverseHazardToolkit:
    """
    Command facade for the multiverse hazard toolkit.

    Settings come from explicit arguments first, then the environment
    (a ``.env`` file is loaded on construction), then built-in defaults.
    """

    DEFAULT_SEED = 0
    DEFAULT_TOLERANCE = 0.02
    DEFAULT_WORKERS = 4

    def __init__(
        self, seed: Optional[int] = None, tolerance: Optional[float] = None, workers: Optional[int] = None
    ) -> None:
        """
        Initialize the toolkit.

        Args:
            seed: Fallback seed. If None, loads MULTIHAZ_SEED.
            tolerance: Oracle tolerance. If None, loads MULTIHAZ_TOLERANCE.
            workers: Sweep worker threads. If None, loads MULTIHAZ_WORKERS.

        Raises:
            ConfigError: If a setting is malformed or out of range.
        """
        load_dotenv()

        self.seed = seed if seed is not None else _env_value("MULTIHAZ_SEED", self.DEFAULT_SEED, int)
        self.tolerance = (
            tolerance if tolerance is not None else _env_value("MULTIHAZ_TOLERANCE", self.DEFAULT_TOLERANCE, float)
        )
        self.workers = workers if workers is not None else _env_value("MULTIHAZ_WORKERS", self.DEFAULT_WORKERS, int)

        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not self.tolerance >= 0:
            raise ConfigError(f"tolerance must be non-negative, got {self.tolerance}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        logger.info(f"Initialized toolkit - seed: {self.seed}, tolerance: {self.tolerance}, workers: {self.workers}")

    def resolve_config(
        self,
        config_path: Optional[str] = None,
        preset: Optional[str] = None,
        m: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> DGPConfig:
        """A config file or a preset (``default`` when neither), with m and seed overrides."""
        if config_path and preset:
            raise ConfigError("--config and --preset are mutually exclusive")
        if config_path:
            config = load_config(config_path, default_seed=self.seed)
            return config.with_overrides(m=m, seed=seed)
        return get_preset(preset or "default", m=m, seed=self.seed if seed is None else seed)

    def config_from_manifest(self, manifest_path: str) -> DGPConfig:
        manifest = load_manifest(manifest_path)
        if manifest.config is None:
            raise ConfigError(f"manifest {manifest_path} records no config to replay")
        return DGPConfig.from_dict(manifest.config)

    def simulate(self, config: DGPConfig, out_dir: str) -> Dict[str, Any]:
        """
        Generate a lattice and its observed cohort.

        Returns:
            Dict with the written paths and headline counts.
        """
        _ensure_dir(out_dir)
        recorder = ManifestRecorder("simulate", seed=config.seed, config=config.to_dict())
        recorder.add_input("preset", config.name)

        logger.info("Step 1: Generating potential-outcome lattice")
        lattice = generate_lattice(config)

        logger.info("Step 2: Observing the actual-world cohort")
        cohort = observe(lattice, config)

        logger.info("Step 3: Writing lattice and cohort files")
        lattice_path = os.path.join(out_dir, "lattice.csv")
        cohort_path = os.path.join(out_dir, "cohort.csv")
        write_lattice(lattice, lattice_path)
        write_cohort(cohort, cohort_path)
        recorder.add_output(lattice_path)
        recorder.add_output(cohort_path)

        manifest_path = os.path.join(out_dir, MANIFEST_NAME)
        recorder.write(manifest_path)
        return {
            "config": config.to_dict(),
            "lattice_path": lattice_path,
            "cohort_path": cohort_path,
            "manifest_path": manifest_path,
            "m": lattice.m,
            "n_times": lattice.J,
            "actual_deaths": int(lattice.actual_deaths().sum()),
            "observed_events": int(cohort.events.sum()),
        }

    def estimate(
        self,
        cohort_path: str,
        out_dir: str,
        arms: Sequence[int] = ARMS,
        tau: Optional[float] = None,
        kinds: Sequence[str] = ALL_KINDS,
        schema: Optional[ColumnSchema] = None,
    ) -> Dict[str, Any]:
        """
        Estimate hazard curves from a cohort file.

        Writes one CSV per (kind, arm), one per stratum for ``conditional``,
        and summary.json with cumulative and average hazards up to ``tau``
        (the last event time when omitted).
        """
        if not kinds:
            raise ConfigError("at least one estimand kind is required")
        _ensure_dir(out_dir)
        recorder = ManifestRecorder("estimate")
        recorder.add_input("cohort", cohort_path)
        recorder.add_input("kinds", list(kinds))
        recorder.add_input("arms", list(arms))

        logger.info("Step 1: Loading cohort and building risk table")
        cohort = load_cohort(cohort_path, schema)
        table = build_risk_table(cohort)
        horizon = float(table.times[-1]) if tau is None else float(tau)
        if horizon < table.times[0]:
            raise ConfigError(f"tau={horizon} precedes the first event time t_1={table.times[0]}")
        recorder.add_input("tau", horizon)

        logger.info(f"Step 2: Estimating {list(kinds)} for arms {list(arms)}")
        curves: List[Dict[str, Any]] = []
        by_kind: Dict[str, Dict[int, Any]] = {}
        for kind in kinds:
            estimator = get_estimator(kind)
            strata: List[Optional[str]] = list(table.strata) if estimator.kind is EstimandKind.CONDITIONAL else [None]
            for z in arms:
                for stratum in strata:
                    curve = estimator.estimate(table, z, stratum=stratum)
                    name = f"curve_{kind}_arm{z}" + ("" if stratum is None else f"_{_file_label(stratum)}")
                    path = os.path.join(out_dir, f"{name}.csv")
                    write_curve_csv(curve, path)
                    recorder.add_output(path)
                    entry = curve_to_dict(curve)
                    entry["file"] = path
                    entry["summary"] = summarize(curve, horizon).to_dict()
                    curves.append(entry)
                    if stratum is None:
                        by_kind.setdefault(kind, {})[z] = curve

        logger.info("Step 3: Contrasts, collapsibility and actual risk")
        contrasts = {
            kind: hazard_contrast(per_arm[1], per_arm[0]).to_dict()
            for kind, per_arm in by_kind.items()
            if 0 in per_arm and 1 in per_arm
        }
        collapsibility: Dict[str, Any] = {}
        if len(table.strata) >= 2:
            for z in arms:
                gap = collapsibility_gap(table, z)
                collapsibility[f"arm{z}"] = {
                    "times": gap.times.tolist(),
                    "cct": gap.cct.tolist(),
                    "icp": gap.icp.tolist(),
                }
        risks: Dict[str, Any] = {}
        for z in arms:
            try:
                risks[f"arm{z}"] = {"value": actual_risk(cohort, z, horizon), "reason": None}
            except (CensoredRiskError, ConfigError) as e:
                risks[f"arm{z}"] = {"value": None, "reason": str(e)}

        summary = {
            "cohort": cohort_path,
            "m": cohort.m,
            "strata": list(table.strata),
            "tau": horizon,
            "curves": curves,
            "contrasts": contrasts,
            "collapsibility_gap": collapsibility,
            "actual_risk": risks,
        }
        summary_path = os.path.join(out_dir, "summary.json")
        write_json(summary, summary_path)
        recorder.add_output(summary_path)
        recorder.write(os.path.join(out_dir, MANIFEST_NAME))
        return summary

    def multiverse(
        self,
        lattice_path: str,
        out_dir: str,
        tau: Optional[float] = None,
        times: Optional[Sequence[float]] = None,
    ) -> Dict[str, Any]:
        """
        Summarize the multiverse of a lattice file into multiverse_report.json.

        Raises:
            LatticeInvariantError: If the lattice violates its coupling.
        """
        _ensure_dir(out_dir)
        recorder = ManifestRecorder("multiverse")
        recorder.add_input("lattice", lattice_path)
        if times is not None:
            recorder.add_input("times", list(times))

        logger.info("Step 1: Reading and validating lattice")
        lattice = read_lattice(lattice_path, times)
        horizon = float(lattice.times[-1]) if tau is None else float(tau)
        recorder.add_input("tau", horizon)

        logger.info(f"Step 2: Summarizing {lattice.J} worlds up to tau={horizon}")
        report = multiverse_summary(lattice, horizon)
        bounds = verify_bounds(lattice, horizon)

        payload = report.to_dict()
        payload["bounds"] = bounds.to_dict()
        report_path = os.path.join(out_dir, "multiverse_report.json")
        write_json(payload, report_path)
        recorder.add_output(report_path)
        recorder.write(os.path.join(out_dir, MANIFEST_NAME))
        return payload

    def _verify_seed(self, config: DGPConfig, tolerance: float) -> Callable[[int], Dict[str, Any]]:
        def job(seed: int) -> Dict[str, Any]:
            seeded = config.with_overrides(seed=seed)
            lattice = generate_lattice(seeded)
            try:
                table: Optional[RiskTable] = build_risk_table(observe(lattice, seeded))
            except CohortError:
                # nothing observed, nothing to collapse
                table = None

            collapsible = True
            if table is not None and len(table.strata) >= 2:
                collapsible = all(
                    float(np.max(np.abs(collapsibility_gap(table, z).icp))) <= COLLAPSIBILITY_TOLERANCE
                    for z in ARMS
                )

            bounds = verify_bounds(lattice)
            oracle = estimator_oracle_check(lattice, tolerance)

            equality: Optional[bool] = None
            if lattice.J == 1:
                report = multiverse_summary(lattice, lattice.times[0])
                equality = all(
                    g.cumulative == g.average == g.actual_risk for g in report.groups.values()
                )

            return {
                "bounds_passed": bounds.passed,
                "failed_checks": len(bounds.failed_checks) + len(bounds.invalid_cells),
                "oracle_passed": oracle.passed,
                "max_discrepancy": oracle.max_discrepancy,
                "collapsibility_passed": collapsible,
                "equality_passed": equality,
            }

        return job

    def verify(
        self,
        config: DGPConfig,
        seeds: Sequence[int],
        tolerance: Optional[float] = None,
        out_dir: Optional[str] = None,
    ) -> Dict[str, Any]:
        """
        Run simulate, estimate, multiverse and the oracle check for every seed.

        Failures are reported in the result (``passed``), not raised.
        """
        tol = self.tolerance if tolerance is None else float(tolerance)
        if not tol >= 0:
            raise ConfigError(f"--tolerance: must be non-negative, got {tol}")
        recorder = ManifestRecorder("verify", seed=seeds[0] if seeds else None, config=config.to_dict())
        recorder.add_input("seeds", list(seeds))
        recorder.add_input("tolerance", tol)

        logger.info(f"Step 1: Verifying {len(seeds)} seeds")
        coordinator = SweepCoordinator(max_workers=self.workers)
        results = coordinator.run_sweep(self._verify_seed(config, tol), seeds)

        logger.info("Step 2: Aggregating per-seed results")
        per_seed = []
        for r in results:
            entry = r.to_dict()
            if r.ok:
                entry.update(r.result)
                entry["passed"] = (
                    r.result["bounds_passed"]
                    and r.result["oracle_passed"]
                    and r.result["collapsibility_passed"]
                    and r.result["equality_passed"] is not False
                )
            else:
                entry["passed"] = False
            if not entry["passed"]:
                logger.warning(f"Seed {r.seed} failed verification")
            per_seed.append(entry)

        passed = all(entry["passed"] for entry in per_seed)
        summary = {
            "passed": passed,
            "tolerance": tol,
            "n_seeds": len(per_seed),
            "n_failed": sum(1 for entry in per_seed if not entry["passed"]),
            "bounds_passed": all(entry.get("bounds_passed", False) for entry in per_seed),
            "oracle_passed": all(entry.get("oracle_passed", False) for entry in per_seed),
            "max_discrepancy": max((entry.get("max_discrepancy", 0.0) for entry in per_seed), default=0.0),
            "sweep": coordinator.get_sweep_summary(),
            "seeds": per_seed,
        }
        if out_dir is not None:
            _ensure_dir(out_dir)
            report_path = os.path.join(out_dir, "verify_report.json")
            write_json(summary, report_path)
            recorder.add_output(report_path)
            recorder.write(os.path.join(out_dir, MANIFEST_NAME), exit_code=0 if passed else 5)
        return summary

    def get_system_info(self) -> Dict[str, Any]:
        """Get information about the toolkit configuration."""
        return {
            "version": __version__,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "workers": self.workers,
            "estimands": [k.value for k in EstimandKind],
        }
