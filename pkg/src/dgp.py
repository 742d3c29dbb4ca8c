"""
Data-Generating Processes

Simulates ground-truth potential-outcome lattices and the observed cohorts
derived from them. Subjects get a stratum, an optional latent frailty class
and an arm; each then walks through the event times with independent
Bernoulli draws at its effective hazard h(t_j | z, x) (times the frailty
multiplier when frail). The first success is the actual death k_i; fresh
draws after k_i are the potential re-deaths of the multiverse coupling.

Every draw comes from a random stream keyed by (seed, subject, purpose) and
indexed by time, so output does not depend on evaluation order.
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .core_data import Cohort, stratum_sort_key
from .errors import ConfigError
from .jsonio import read_json, write_json
from .multiverse import NO_DEATH, PotentialOutcomeLattice

logger = logging.getLogger(__name__)

PURPOSES = {"assignment": 0, "event": 1, "redeath": 2, "censor": 3}
ASSIGNMENT_KINDS = ("randomized", "confounded")


def _check_probability(value: float, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: {value!r} is not a number")
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name}: {value} outside [0, 1]")
    return value


@dataclass(frozen=True)
class Assignment:
    """Treatment assignment: randomized(p) or confounded with p(Z=1 | x)."""

    kind: str = "randomized"
    p: float = 0.5
    p_by_stratum: Optional[Mapping[str, float]] = None

    def __post_init__(self) -> None:
        if self.kind not in ASSIGNMENT_KINDS:
            raise ConfigError(f"assignment.kind: {self.kind!r} not in {ASSIGNMENT_KINDS}")
        _check_probability(self.p, "assignment.p")
        if self.kind == "confounded":
            if not self.p_by_stratum:
                raise ConfigError("assignment.p_by_stratum: required for confounded assignment")
            for label, p in self.p_by_stratum.items():
                _check_probability(p, f"assignment.p_by_stratum[{label}]")

    def treatment_probabilities(self, strata: Sequence[str]) -> np.ndarray:
        if self.kind == "randomized":
            return np.full(len(strata), float(self.p))
        missing = [x for x in strata if x not in (self.p_by_stratum or {})]
        if missing:
            raise ConfigError(f"assignment.p_by_stratum: no probability for strata {missing}")
        return np.array([float(self.p_by_stratum[x]) for x in strata])  # type: ignore[index]

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "randomized":
            return {"kind": self.kind, "p": self.p}
        return {"kind": self.kind, "p_by_stratum": dict(self.p_by_stratum or {})}


@dataclass(frozen=True)
class Frailty:
    """Latent binary frailty: a ``prevalence`` share has hazards scaled by ``multiplier``."""

    prevalence: float
    multiplier: float

    def __post_init__(self) -> None:
        _check_probability(self.prevalence, "frailty.prevalence")
        if not self.multiplier >= 0:
            raise ConfigError(f"frailty.multiplier: {self.multiplier} must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return {"prevalence": self.prevalence, "multiplier": self.multiplier}


@dataclass(frozen=True)
class DGPConfig:
    """
    Configuration of one data-generating process.

    ``hazards[x][z]`` lists h(t_j | z, x) for every event time; strata are
    ordered numerically, then lexicographically. ``censoring`` lists the
    probability that a subject still under observation is censored just
    before t_j.
    """

    m: int
    times: Tuple[float, ...]
    strata_probs: Mapping[str, float]
    hazards: Mapping[str, Mapping[int, Tuple[float, ...]]]
    assignment: Assignment = Assignment()
    frailty: Optional[Frailty] = None
    censoring: Optional[Tuple[float, ...]] = None
    seed: int = 0
    name: Optional[str] = None

    def __post_init__(self) -> None:
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 1:
            raise ConfigError(f"m: sample size must be a positive integer, got {self.m!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: must be a non-negative integer, got {self.seed!r}")
        times = np.asarray(self.times, dtype=float)
        if len(times) == 0:
            raise ConfigError("times: at least one event time is required")
        if times[0] <= 0 or np.any(np.diff(times) <= 0):
            raise ConfigError("times: must be positive and strictly increasing")
        if not self.strata_probs:
            raise ConfigError("strata_probs: at least one stratum is required")
        for label, p in self.strata_probs.items():
            _check_probability(p, f"strata_probs[{label}]")
        total = sum(float(p) for p in self.strata_probs.values())
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"strata_probs: probabilities sum to {total}, not 1")
        if set(self.hazards) != set(self.strata_probs):
            raise ConfigError(
                f"hazards: strata {sorted(self.hazards)} do not match strata_probs {sorted(self.strata_probs)}"
            )
        for label, by_arm in self.hazards.items():
            for z in (0, 1):
                if z not in by_arm:
                    raise ConfigError(f"hazards[{label}][{z}]: missing")
                if len(by_arm[z]) != len(times):
                    raise ConfigError(
                        f"hazards[{label}][{z}]: {len(by_arm[z])} values for {len(times)} event times"
                    )
                for j, h in enumerate(by_arm[z]):
                    _check_probability(h, f"hazards[{label}][{z}][{j}]")
        self.assignment.treatment_probabilities(list(self.strata_probs))
        if self.censoring is not None:
            if len(self.censoring) != len(times):
                raise ConfigError(f"censoring: {len(self.censoring)} values for {len(times)} event times")
            for j, c in enumerate(self.censoring):
                _check_probability(c, f"censoring[{j}]")
        if self.frailty is not None:
            peak = float(self.hazard_array().max()) * self.frailty.multiplier
            if peak > 1.0:
                raise ConfigError(
                    f"frailty.multiplier: effective hazard {peak:.4g} outside [0, 1]"
                )

    @property
    def J(self) -> int:
        return len(self.times)

    @property
    def strata(self) -> List[str]:
        """Stratum labels in canonical order, whatever the order of ``strata_probs``."""
        return sorted(self.strata_probs, key=stratum_sort_key)

    def hazard_array(self) -> np.ndarray:
        """h(t_j | z, x) indexed [j, z, x] with x in ``strata`` order."""
        return np.array(
            [[list(self.hazards[x][z]) for x in self.strata] for z in (0, 1)], dtype=float
        ).transpose(2, 0, 1)

    def with_overrides(self, **overrides: Any) -> "DGPConfig":
        overrides = {k: v for k, v in overrides.items() if v is not None}
        try:
            return dataclasses.replace(self, **overrides)
        except TypeError as e:
            raise ConfigError(f"invalid override: {e}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "m": self.m,
            "seed": self.seed,
            "times": list(self.times),
            "strata_probs": dict(self.strata_probs),
            "hazards": {x: {str(z): list(h) for z, h in by_arm.items()} for x, by_arm in self.hazards.items()},
            "assignment": self.assignment.to_dict(),
            "frailty": None if self.frailty is None else self.frailty.to_dict(),
            "censoring": None if self.censoring is None else list(self.censoring),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DGPConfig":
        """Build a config from its JSON form, reporting the offending field."""
        try:
            assignment = data.get("assignment") or {"kind": "randomized", "p": 0.5}
            frailty = data.get("frailty")
            censoring = data.get("censoring")
            return cls(
                m=data["m"],
                times=tuple(float(t) for t in data["times"]),
                strata_probs={str(x): float(p) for x, p in data["strata_probs"].items()},
                hazards={
                    str(x): {int(z): tuple(float(h) for h in values) for z, values in by_arm.items()}
                    for x, by_arm in data["hazards"].items()
                },
                assignment=Assignment(
                    kind=assignment.get("kind", "randomized"),
                    p=float(assignment.get("p", 0.5)),
                    p_by_stratum=assignment.get("p_by_stratum"),
                ),
                frailty=None if frailty is None else Frailty(
                    prevalence=float(frailty["prevalence"]), multiplier=float(frailty["multiplier"])
                ),
                censoring=None if censoring is None else tuple(float(c) for c in censoring),
                seed=data.get("seed", 0),
                name=data.get("name"),
            )
        except KeyError as e:
            raise ConfigError(f"missing config field {e}")
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"malformed config: {e}")


def load_config(path: str, default_seed: int = 0) -> DGPConfig:
    """Read a JSON config; a file without a seed field gets ``default_seed``."""
    data = read_json(path, malformed=ConfigError)
    if not isinstance(data, dict):
        raise ConfigError(f"malformed config: {path} does not hold a JSON object")
    data.setdefault("seed", default_seed)
    return DGPConfig.from_dict(data)


def save_config(config: DGPConfig, path: str) -> None:
    write_json(config.to_dict(), path)


def subject_stream(seed: int, subject: int, purpose: str) -> np.random.Generator:
    """Random stream of one subject for one purpose; position j belongs to t_j."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(subject, PURPOSES[purpose])))


def keyed_uniforms(seed: int, purpose: str, m: int, size: int) -> np.ndarray:
    """(m, size) uniforms; row i comes from subject i's stream for ``purpose``."""
    out = np.empty((m, size))
    for i in range(m):
        out[i] = subject_stream(seed, i, purpose).random(size)
    return out


def generate_lattice(config: DGPConfig) -> PotentialOutcomeLattice:
    """
    Draw the potential-outcome lattice of ``config``.

    Raises:
        ConfigError: If an effective hazard falls outside [0, 1].
    """
    m, J = config.m, config.J
    strata = config.strata
    logger.info(f"Generating lattice: m={m}, J={J}, strata={strata}, seed={config.seed}")

    baseline = keyed_uniforms(config.seed, "assignment", m, 3)
    cumulative = np.cumsum([config.strata_probs[x] for x in strata])
    codes = np.minimum(np.searchsorted(cumulative, baseline[:, 0], side="right"), len(strata) - 1)
    frail = None
    if config.frailty is not None:
        frail = baseline[:, 1] < config.frailty.prevalence
    treat_p = config.assignment.treatment_probabilities(strata)
    arms = (baseline[:, 2] < treat_p[codes]).astype(np.int64)

    hazards = config.hazard_array()[:, arms, codes].T.copy()
    if frail is not None:
        hazards[frail] *= config.frailty.multiplier  # type: ignore[union-attr]
    if np.any(hazards < 0) or np.any(hazards > 1):
        raise ConfigError("effective hazard outside [0, 1]")

    first = keyed_uniforms(config.seed, "event", m, J) < hazards
    dies = first.any(axis=1)
    death_index = np.where(dies, first.argmax(axis=1), NO_DEATH)

    redeath = keyed_uniforms(config.seed, "redeath", m, J) < hazards
    worlds = np.arange(J)
    deaths = redeath & dies[:, None] & (worlds[None, :] > death_index[:, None])
    rows = np.nonzero(dies)[0]
    deaths[rows, death_index[rows]] = True

    lattice = PotentialOutcomeLattice(
        times=tuple(float(t) for t in config.times),
        ids=np.arange(m, dtype=np.int64),
        arms=arms,
        strata=tuple(strata[c] for c in codes),
        death_index=death_index.astype(np.int64),
        deaths=deaths.astype(np.uint8),
        frail=frail,
    )
    logger.info(f"Lattice ready: {int(dies.sum())} actual deaths, {int(deaths.sum())} world deaths")
    return lattice


def observe(
    lattice: PotentialOutcomeLattice, config: DGPConfig, expose_frailty: bool = False
) -> Cohort:
    """
    Derive the observed cohort of a lattice.

    Censoring at t_j happens just before t_j, at the midpoint of
    (t_{j-1}, t_j) with t_0 = 0; uncensored survivors are censored at t_J.
    Frailty is unmeasured and only joins the stratum label
    (``<x>|frail`` / ``<x>|robust``) when ``expose_frailty`` is set.

    Raises:
        ConfigError: If the lattice does not match the config's shape.
        CohortError: If no event is observed.
    """
    if lattice.m != config.m or lattice.J != config.J:
        raise ConfigError("lattice was not generated from this config")
    times = np.asarray(lattice.times, dtype=float)
    k = lattice.death_index
    dies = k != NO_DEATH

    censored = np.zeros(lattice.m, dtype=bool)
    censor_index = np.zeros(lattice.m, dtype=np.int64)
    if config.censoring is not None:
        draws = keyed_uniforms(config.seed, "censor", lattice.m, lattice.J) < np.asarray(config.censoring)
        has_draw = draws.any(axis=1)
        censor_index = draws.argmax(axis=1)
        censored = has_draw & (~dies | (censor_index <= k))

    previous = np.concatenate(([0.0], times[:-1]))
    followup = np.where(
        censored,
        (previous[censor_index] + times[censor_index]) / 2.0,
        np.where(dies, times[np.where(dies, k, 0)], times[-1]),
    )
    events = (dies & ~censored).astype(np.int64)

    strata: Sequence[str] = lattice.strata
    if expose_frailty:
        if lattice.frail is None:
            raise ConfigError("lattice carries no frailty classes to expose")
        strata = [f"{x}|{'frail' if f else 'robust'}" for x, f in zip(lattice.strata, lattice.frail)]
    declared = sorted(set(strata), key=stratum_sort_key)

    logger.info(
        f"Observed cohort: {int(events.sum())} events, {int(censored.sum())} censored before death or end"
    )
    return Cohort.from_columns(
        ids=lattice.ids,
        arms=lattice.arms,
        strata=strata,
        times=followup,
        events=events,
        declared_strata=declared,
    )


def _constant(value: float, n_times: int) -> Tuple[float, ...]:
    return tuple(float(value) for _ in range(n_times))


def scenario_selection_bias(
    m: int = 50000,
    seed: int = 2024,
    frailty_multiplier: float = 5.0,
    prevalence: float = 0.5,
    base_hazard: float = 0.1,
    hazard_ratio: float = 0.25,
    n_times: int = 5,
    **overrides: Any,
) -> DGPConfig:
    """
    Beneficial treatment in a population with two latent frailty classes.

    Within each class the hazard ratio is constant; frail controls die off
    fastest, so the surviving control group becomes healthier and the
    marginal hazard ratio drifts toward 1.
    """
    config = DGPConfig(
        name="selection-bias",
        m=m,
        seed=seed,
        times=tuple(float(t) for t in range(1, n_times + 1)),
        strata_probs={"0": 1.0},
        hazards={"0": {0: _constant(base_hazard, n_times), 1: _constant(base_hazard * hazard_ratio, n_times)}},
        assignment=Assignment("randomized", 0.5),
        frailty=Frailty(prevalence=prevalence, multiplier=frailty_multiplier),
    )
    return config.with_overrides(**overrides)


def scenario_noncollapsible(
    m: int = 50000,
    seed: int = 2024,
    high_risk_multiplier: float = 8.0,
    base_hazard: float = 0.05,
    treatment_ratio: float = 0.6,
    n_times: int = 5,
    **overrides: Any,
) -> DGPConfig:
    """
    Two equally sized strata with very different hazards, randomized
    treatment and no frailty. The high-risk stratum depletes, so the
    conditioning (cCT) hazard falls below the interventional (iCP) hazard.
    """
    low = base_hazard
    high = base_hazard * high_risk_multiplier
    config = DGPConfig(
        name="noncollapsible",
        m=m,
        seed=seed,
        times=tuple(float(t) for t in range(1, n_times + 1)),
        strata_probs={"low": 0.5, "high": 0.5},
        hazards={
            "low": {0: _constant(low, n_times), 1: _constant(low * treatment_ratio, n_times)},
            "high": {0: _constant(high, n_times), 1: _constant(high * treatment_ratio, n_times)},
        },
        assignment=Assignment("randomized", 0.5),
    )
    return config.with_overrides(**overrides)


def scenario_default(m: int = 2000, seed: int = 0, **overrides: Any) -> DGPConfig:
    """Two strata, randomized treatment, four event times."""
    config = DGPConfig(
        name="default",
        m=m,
        seed=seed,
        times=(1.0, 2.0, 3.0, 4.0),
        strata_probs={"A": 0.5, "B": 0.5},
        hazards={
            "A": {0: _constant(0.03, 4), 1: _constant(0.021, 4)},
            "B": {0: _constant(0.06, 4), 1: _constant(0.042, 4)},
        },
        assignment=Assignment("randomized", 0.5),
    )
    return config.with_overrides(**overrides)


def scenario_randomized_constant(
    m: int = 10000, seed: int = 0, hazard: float = 0.1, n_times: int = 3, **overrides: Any
) -> DGPConfig:
    """One stratum, randomized treatment, the same hazard in both arms at every time."""
    config = DGPConfig(
        name="randomized-constant",
        m=m,
        seed=seed,
        times=tuple(float(t) for t in range(1, n_times + 1)),
        strata_probs={"0": 1.0},
        hazards={"0": {0: _constant(hazard, n_times), 1: _constant(hazard, n_times)}},
        assignment=Assignment("randomized", 0.5),
    )
    return config.with_overrides(**overrides)


def scenario_confounded(m: int = 10000, seed: int = 0, **overrides: Any) -> DGPConfig:
    """Stratum drives both treatment uptake and the hazard."""
    config = DGPConfig(
        name="confounded",
        m=m,
        seed=seed,
        times=(1.0, 2.0, 3.0),
        strata_probs={"A": 0.5, "B": 0.5},
        hazards={
            "A": {0: _constant(0.05, 3), 1: _constant(0.03, 3)},
            "B": {0: _constant(0.25, 3), 1: _constant(0.15, 3)},
        },
        assignment=Assignment("confounded", p_by_stratum={"A": 0.8, "B": 0.2}),
    )
    return config.with_overrides(**overrides)


PRESETS: Dict[str, Callable[..., DGPConfig]] = {
    "default": scenario_default,
    "randomized-constant": scenario_randomized_constant,
    "confounded": scenario_confounded,
    "noncollapsible": scenario_noncollapsible,
    "selection-bias": scenario_selection_bias,
}


def list_presets() -> Dict[str, str]:
    """Preset name -> first line of its description."""
    return {name: (factory.__doc__ or "").strip().splitlines()[0] for name, factory in PRESETS.items()}


def get_preset(name: str, **overrides: Any) -> DGPConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return factory(**{k: v for k, v in overrides.items() if v is not None})
