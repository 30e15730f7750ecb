"""Monte Carlo experiments: empirical size and power of the tests.

A scenario fixes the group populations, sample sizes, contrast, targets and
methods; running it repeats data generation + testing ``mc_replications``
times and reports the rejection rate per (method, target) together with the
binomial confidence band around the nominal level.  Everything is keyed off
one master seed, so a scenario re-run reproduces its rates exactly,
independent of worker count.

``table_preset`` builds the bundled study grids (presets ``table2`` ...
``table6``); the ``scale`` knob shrinks replication and permutation counts
jointly for desk-scale runs, with floors that keep the confidence bands
meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import joblib
import numpy as np

from . import streams
from .contrasts import DesignSpec, build_contrast, validate_contrast
from .distributions import PopulationSpec, sample_population, scenario_mean_vector
from .errors import ConfigError, MCVError, TooFewValidReplications, UnknownPreset
from .estimators import GroupSample
from .linalg import ContrastSpec
from .permutation import PermutationPlan, _resolve_workers, run_tests
from .wald import TARGETS

METHODS = ("asymptotic", "permutation")
FAILURE_SHARE = 0.01
_PERM_SEED_TAG = 1 << 32  # stream path tag, outside any group index

PRESETS = ("table2", "table3", "table4", "table5", "table6")

__all__ = [
    "METHODS",
    "PRESETS",
    "ScenarioConfig",
    "RateReport",
    "binomial_band",
    "run_scenario",
    "table_preset",
    "report_records",
    "format_records",
]


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    """One simulation scenario.

    Exactly one of ``design`` / ``custom_contrast`` must be set; group count
    must match the contrast's column count.
    """

    scenario_id: str
    populations: tuple[PopulationSpec, ...]
    sizes: tuple[int, ...]
    design: DesignSpec | None = None
    custom_contrast: np.ndarray | None = None
    targets: tuple[str, ...] = ("mcv", "std_mean")
    methods: tuple[str, ...] = ("asymptotic", "permutation")
    alpha: float = 0.05
    mc_replications: int = 1000
    permutation_plan: PermutationPlan = field(default_factory=PermutationPlan)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.mc_replications < 1:
            raise ConfigError(f"mc_replications must be >= 1, got {self.mc_replications}")
        if (self.design is None) == (self.custom_contrast is None):
            raise ConfigError("exactly one of design / custom_contrast must be given")
        if not self.targets or any(t not in TARGETS for t in self.targets):
            raise ConfigError(f"targets must be a nonempty subset of {TARGETS}")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise ConfigError(f"methods must be a nonempty subset of {METHODS}")
        if len(self.populations) != len(self.sizes):
            raise ConfigError("populations and sizes must have the same length")
        k = len(self.populations)
        expected = self.design.cells if self.design is not None else None
        if expected is not None and expected != k:
            raise ConfigError(f"design has {expected} cells but {k} populations were given")
        if any(m < 1 for m in self.sizes):
            raise ConfigError("all group sizes must be positive")
        d = self.populations[0].d
        if any(p.d != d for p in self.populations):
            raise ConfigError("all populations must share one dimension")

    def contrast(self) -> ContrastSpec:
        if self.design is not None:
            return build_contrast(self.design)
        return validate_contrast(self.custom_contrast, len(self.populations))


@dataclass(frozen=True)
class RateReport:
    """Rejection rate over the valid replications.

    ``band`` is the binomial confidence band around the nominal level,
    recomputed from the achieved replication count (never hard-coded).
    """

    rejection_rate: float
    n_valid: int
    band: tuple[float, float]
    in_binomial_band: bool
    failures: int = 0


def binomial_band(alpha: float, reps: int) -> tuple[float, float]:
    """Normal-approximation 95% band for the rejection rate at level alpha."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    half = 1.96 * math.sqrt(alpha * (1.0 - alpha) / reps)
    return (alpha - half, alpha + half)


def _replicate(config: ScenarioConfig, contrast: ContrastSpec, rep: int):
    """Rejections of one replication, or None when estimation failed."""
    groups = []
    for i, (pop, m) in enumerate(zip(config.populations, config.sizes)):
        data = sample_population(pop, m, streams.stream(config.seed, rep, i))
        groups.append(GroupSample(data, label=pop.label or f"group-{i + 1}"))
    plan = None
    if "permutation" in config.methods:
        plan = replace(
            config.permutation_plan,
            seed=streams.derive_seed(config.seed, rep, _PERM_SEED_TAG),
        )
    try:
        results = run_tests(groups, contrast, config.targets, plan=plan, workers=1)
    except MCVError:
        return None
    rejections = {}
    for t in config.targets:
        if "asymptotic" in config.methods:
            rejections[("asymptotic", t)] = results[t].p_asymptotic <= config.alpha
        if "permutation" in config.methods:
            rejections[("permutation", t)] = results[t].p_permutation <= config.alpha
    return rejections


def run_scenario(
    config: ScenarioConfig, workers: int | None = None
) -> dict[tuple[str, str], RateReport]:
    """Rejection-rate reports per (method, target), deterministic in the seed."""
    contrast = config.contrast()
    workers = _resolve_workers(workers)
    reps = range(config.mc_replications)
    if workers > 1:
        outcomes = joblib.Parallel(n_jobs=workers)(
            joblib.delayed(_replicate)(config, contrast, r) for r in reps
        )
    else:
        outcomes = [_replicate(config, contrast, r) for r in reps]
    valid = [o for o in outcomes if o is not None]
    failures = config.mc_replications - len(valid)
    if failures > FAILURE_SHARE * config.mc_replications:
        raise TooFewValidReplications(
            f"scenario {config.scenario_id!r}: {failures} of {config.mc_replications} "
            f"replications failed (> {FAILURE_SHARE:.0%} tolerated)"
        )
    n_valid = len(valid)
    band = binomial_band(config.alpha, n_valid)
    reports = {}
    for method in config.methods:
        for target in config.targets:
            key = (method, target)
            rate = sum(o[key] for o in valid) / n_valid
            reports[key] = RateReport(
                rejection_rate=rate,
                n_valid=n_valid,
                band=band,
                in_binomial_band=band[0] <= rate <= band[1],
                failures=failures,
            )
    return reports


# ---------------------------------------------------------------------------
# preset grids

_DISTRIBUTIONS = (
    ("PE2", "power_exponential", 2.0),
    ("N", "normal", None),
    ("PE0.5", "power_exponential", 0.5),
    ("t5", "student_t", 5.0),
)

# Univariate 2x4 MCV grids, flattened with the first factor outer.  Each
# setting provides three effect patterns: only a first-factor effect, only a
# second-factor effect, or all effects at once.
_TWO_WAY_MCV = {
    "A1": {
        "A-only": (0.237, 0.237, 0.237, 0.237, 0.300, 0.300, 0.300, 0.300),
        "B-only": (0.237, 0.300, 0.300, 0.300, 0.237, 0.300, 0.300, 0.300),
        "all-effects": (0.167, 0.249, 0.237, 0.249, 0.277, 0.300, 0.320, 0.300),
    },
    "A2": {
        "A-only": (0.346, 0.346, 0.346, 0.346, 0.300, 0.300, 0.300, 0.300),
        "B-only": (0.346, 0.300, 0.300, 0.300, 0.346, 0.300, 0.300, 0.300),
        "all-effects": (0.500, 0.373, 0.346, 0.373, 0.305, 0.300, 0.320, 0.300),
    },
}

# cell sizes for the two-way grid; the unbalanced one-way grids fix their own
_TWO_WAY_CELL_SIZE = 20

UNBALANCED_SIZES = (35, 45, 40, 50)


def _scaled_counts(scale: float) -> tuple[int, int]:
    if not 0.0 < scale <= 1.0:
        raise ConfigError(f"scale must be in (0, 1], got {scale}")
    reps = max(200, round(1000 * scale))
    perms = max(199, round(1000 * scale))
    return reps, perms


def _one_way_config(
    scenario_id, dist, mean_kind, mcvs, sizes, d, reps, perms, seed
) -> ScenarioConfig:
    label, family, shape = dist
    total_n = sum(sizes)
    pops = tuple(
        PopulationSpec(
            family=family,
            mean=scenario_mean_vector(mean_kind, c, d, total_n),
            cov=np.eye(d),
            shape=shape,
            label=f"group-{i + 1}",
        )
        for i, c in enumerate(mcvs)
    )
    return ScenarioConfig(
        scenario_id=scenario_id,
        populations=pops,
        sizes=tuple(sizes),
        design=DesignSpec(layout="one-way", effect="group", k=len(mcvs)),
        mc_replications=reps,
        permutation_plan=PermutationPlan(replications=perms),
        seed=seed,
    )


def table_preset(name: str, scale: float = 1.0, seed: int = 0) -> list[ScenarioConfig]:
    """Scenario grid for one bundled preset, scaled for desk-size runs.

    ``scale`` multiplies both the Monte Carlo replication count and the
    permutation count (nominal 1000 each), with floors of 200 replications
    and 199 permutations.  Scenario seeds derive from ``seed`` and the
    scenario's position, so grids are reproducible end to end.
    """
    reps, perms = _scaled_counts(scale)
    configs: list[ScenarioConfig] = []

    def sub_seed() -> int:
        return streams.derive_seed(seed, len(configs))

    if name == "table2":
        for dist in _DISTRIBUTIONS:
            for c0 in (0.1, 0.5, 2.0):
                for n0 in (20, 35, 50):
                    configs.append(
                        _one_way_config(
                            f"table2:{dist[0]}:C0={c0:g}:n0={n0}",
                            dist,
                            "mu1",
                            (c0, c0),
                            (n0, n0),
                            5,
                            reps,
                            perms,
                            sub_seed(),
                        )
                    )
    elif name == "table3":
        for dist in _DISTRIBUTIONS:
            for c2 in (0.5, 1.0, 1.5):
                configs.append(
                    _one_way_config(
                        f"table3:{dist[0]}:C2={c2:g}",
                        dist,
                        "mu1",
                        (1.0, c2),
                        (50, 50),
                        5,
                        reps,
                        perms,
                        sub_seed(),
                    )
                )
    elif name in ("table4", "table5"):
        if name == "table4":
            mcv_pairs = [(c0, c0) for c0 in (0.1, 0.5, 1.0, 1.5, 2.0)]
        else:
            mcv_pairs = [(0.07, 0.1), (0.13, 0.1), (0.5, 1.0), (1.5, 1.0)]
        for dist in _DISTRIBUTIONS:
            for k in (2, 4):
                for d in (5, 10):
                    for c1, c_rest in mcv_pairs:
                        mcvs = (c1,) + (c_rest,) * (k - 1)
                        tag = f"C0={c1:g}" if c1 == c_rest else f"C=({c1:g},{c_rest:g})"
                        configs.append(
                            _one_way_config(
                                f"{name}:{dist[0]}:k={k}:d={d}:{tag}",
                                dist,
                                "mu2",
                                mcvs,
                                UNBALANCED_SIZES[:k],
                                d,
                                reps,
                                perms,
                                sub_seed(),
                            )
                        )
    elif name == "table6":
        effects = (("A", "main-A"), ("B", "main-B"), ("AB", "interaction"))
        for dist in _DISTRIBUTIONS:
            label, family, shape = dist
            for setting, scenarios in _TWO_WAY_MCV.items():
                for scenario, mcvs in scenarios.items():
                    pops = tuple(
                        PopulationSpec(
                            family=family,
                            mean=np.array([1.0 / c]),
                            cov=np.eye(1),
                            shape=shape,
                            label=f"cell-{i // 4 + 1}{i % 4 + 1}",
                        )
                        for i, c in enumerate(mcvs)
                    )
                    for tag, effect in effects:
                        configs.append(
                            ScenarioConfig(
                                scenario_id=f"table6:{label}:{setting}:{scenario}:H={tag}",
                                populations=pops,
                                sizes=(_TWO_WAY_CELL_SIZE,) * 8,
                                design=DesignSpec(layout="two-way", effect=effect, a=2, b=4),
                                mc_replications=reps,
                                permutation_plan=PermutationPlan(replications=perms),
                                seed=sub_seed(),
                            )
                        )
    else:
        raise UnknownPreset(f"unknown preset {name!r}; expected one of {PRESETS}")
    return configs


def report_records(
    config: ScenarioConfig, reports: dict[tuple[str, str], RateReport]
) -> list[dict]:
    """Flat JSON-ready records, one per (method, target)."""
    records = []
    for (method, target), rep in sorted(reports.items()):
        records.append(
            {
                "scenario_id": config.scenario_id,
                "method": method,
                "target": target,
                "rate": rep.rejection_rate,
                "band": [rep.band[0], rep.band[1]],
                "n_valid": rep.n_valid,
                "in_band": rep.in_binomial_band,
                "failures": rep.failures,
                "seed": config.seed,
            }
        )
    return records


def format_records(records: list[dict]) -> str:
    """Human-readable aligned table of rate records (rates in percent)."""
    header = ("scenario", "method", "target", "rate%", "band%", "n", "fail")
    rows = [header]
    for r in records:
        band = f"[{100 * r['band'][0]:.1f},{100 * r['band'][1]:.1f}]"
        flag = "" if r["in_band"] else " *"
        rows.append(
            (
                r["scenario_id"],
                r["method"],
                r["target"],
                f"{100 * r['rate']:.1f}{flag}",
                band,
                str(r["n_valid"]),
                str(r["failures"]),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)) for row in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
