"""Command-line interface: `mcvtest test` and `mcvtest simulate`.

Exit codes: 0 on success, 1 on usage/validation errors, 2 when estimation
fails on the supplied data.  Human-readable reports print percentages like
the usual journal tables; JSON output carries raw proportions and is
byte-identical across repeated runs with the same seed, independent of the
worker count (``--workers`` or the MCVTESTS_WORKERS variable).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys

import numpy as np

from .contrasts import DesignSpec, build_contrast, validate_contrast
from .datasets import CellInfo, IngestSpec, load_dataset
from .distributions import PopulationSpec
from .errors import (
    BadDesign,
    ConfigError,
    DomainError,
    InvalidPlan,
    MCVError,
    UnknownPreset,
)
from .linalg import ContrastSpec
from .permutation import PermutationPlan, run_tests
from .simulation import (
    PRESETS,
    ScenarioConfig,
    format_records,
    report_records,
    run_scenario,
    table_preset,
)

USAGE_ERRORS = (ConfigError, UnknownPreset, BadDesign, InvalidPlan, DomainError)

_EFFECTS = {
    "group": ("one-way", "group"),
    "A": ("two-way", "main-A"),
    "B": ("two-way", "main-B"),
    "AB": ("two-way", "interaction"),
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; our contract reserves 2
    # for estimation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="mcvtest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("test", help="run tests on a CSV dataset")
    t.add_argument("--data", required=True, help="CSV file with responses and factors")
    t.add_argument(
        "--values",
        required=True,
        help="comma-separated response columns (names, or 1-based positions with --no-header)",
    )
    t.add_argument("--factors", required=True, help="comma-separated factor columns (1 or 2)")
    t.add_argument(
        "--effect",
        choices=["group", "A", "B", "AB", "custom"],
        default=None,
        help="effect to test; defaults to 'group' for one factor",
    )
    t.add_argument("--contrast", help="CSV file with a custom hypothesis matrix (r x k)")
    t.add_argument("--target", choices=["mcv", "stdmean", "both"], default="both")
    t.add_argument("--method", choices=["asymptotic", "permutation", "both"], default="both")
    t.add_argument("--permutations", type=int, default=1000, metavar="B")
    t.add_argument("--p-rule", choices=["add-one", "raw-proportion"], default="add-one")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--format", choices=["text", "json"], default="text")
    t.add_argument(
        "--levels",
        help="explicit factor level order, ';' between factors, ',' within: 'Yes,No;<6m,>6m'",
    )
    t.add_argument("--delimiter", default=",")
    t.add_argument("--no-header", action="store_true", help="file has no header row")
    t.add_argument("--workers", type=int, default=None)

    s = sub.add_parser("simulate", help="run Monte Carlo size/power scenarios")
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--preset", choices=list(PRESETS))
    grp.add_argument("--config", help="JSON scenario configuration file")
    s.add_argument("--scale", type=float, default=1.0, help="preset grid scale in (0, 1]")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", help="write the JSON report to this file")
    s.add_argument("--format", choices=["text", "json"], default="text")
    s.add_argument("--workers", type=int, default=None)
    return parser


# ---------------------------------------------------------------------------
# mcvtest test


def _parse_levels(raw: str | None, n_factors: int):
    if raw is None:
        return None
    parts = raw.split(";")
    if len(parts) != n_factors:
        raise ConfigError(f"--levels needs {n_factors} ';'-separated lists, got {len(parts)}")
    return tuple(tuple(lev.strip() for lev in part.split(",") if lev.strip()) for part in parts)


def _read_contrast_file(path: str) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            rows = [row for row in csv.reader(handle) if any(cell.strip() for cell in row)]
    except OSError as exc:
        raise MCVError(f"cannot read contrast file {path}: {exc}") from exc
    if not rows:
        raise MCVError(f"contrast file {path} is empty")
    try:
        return np.asarray([[float(cell) for cell in row] for row in rows])
    except ValueError as exc:
        raise MCVError(f"contrast file {path}: non-numeric entry ({exc})") from exc


def _resolve_contrast(args, cells: list[CellInfo], n_factor_levels: list[int]) -> ContrastSpec:
    effect = args.effect
    if effect is None:
        effect = "group" if len(n_factor_levels) == 1 else None
    if effect is None:
        raise ConfigError("two factors given: choose --effect A, B, AB or custom")
    if effect == "custom":
        if not args.contrast:
            raise ConfigError("--effect custom requires --contrast FILE")
        return validate_contrast(_read_contrast_file(args.contrast), len(cells))
    layout, internal = _EFFECTS[effect]
    if layout == "one-way":
        if len(n_factor_levels) != 1:
            raise ConfigError("--effect group applies to a single factor column")
        design = DesignSpec(layout="one-way", effect="group", k=n_factor_levels[0])
    else:
        if len(n_factor_levels) != 2:
            raise ConfigError(f"--effect {effect} requires two factor columns")
        design = DesignSpec(
            layout="two-way", effect=internal, a=n_factor_levels[0], b=n_factor_levels[1]
        )
    return build_contrast(design)


def _test_report_dict(args, cells, results, effect, total_n, d):
    any_result = next(iter(results.values()))
    groups_json = [
        {
            "index": cell.index + 1,
            "label": cell.label,
            "n": est.n,
            "weight": est.weight,
            "mcv": est.mcv,
            "std_mean": est.std_mean,
            "var_mcv": est.var_mcv,
            "var_std_mean": est.var_std_mean,
        }
        for cell, est in zip(cells, any_result.estimates)
    ]
    tests_json = []
    for target, res in results.items():
        entry = {
            "target": target,
            "statistic": res.statistic,
            "df": res.df,
            "p_asymptotic": res.p_asymptotic,
        }
        if res.p_permutation is not None:
            entry["p_permutation"] = res.p_permutation
            entry["permutations_used"] = res.permutations_used
            entry["permutation_failures"] = res.permutation_failures
        tests_json.append(entry)
    return {
        "schema": "mcvtests/test-report/v1",
        "command": "test",
        "data": {
            "path": args.data,
            "n": total_n,
            "d": d,
            "cells": [
                {"index": c.index + 1, "label": c.label, "levels": list(c.levels), "n": c.n}
                for c in cells
            ],
        },
        "effect": effect,
        "alpha": args.alpha,
        "seed": args.seed,
        "groups": groups_json,
        "tests": tests_json,
    }


def _print_test_text(args, cells, results, contrast, effect, two_way):
    any_result = next(iter(results.values()))
    print(f"Data: {args.data}")
    if two_way:
        print("Cells (first factor outer, second factor inner):")
    else:
        print("Cells:")
    for cell in cells:
        print(f"  [{cell.index + 1}] {cell.label}  n={cell.n}")
    print(f"Effect: {effect} (df = {contrast.rank})")
    print()
    print("Group estimates:")
    head = f"  {'cell':<24}{'n':>5}  {'MCV%':>8}  {'MCV':>9}  {'std.mean':>9}  {'var(MCV)':>11}  {'var(s.m.)':>11}"
    print(head)
    for cell, est in zip(cells, any_result.estimates):
        print(
            f"  {cell.label:<24}{est.n:>5}  {100 * est.mcv:>8.2f}  {est.mcv:>9.4f}  "
            f"{est.std_mean:>9.4f}  {est.var_mcv:>11.4g}  {est.var_std_mean:>11.4g}"
        )
    print()
    print(f"Tests (alpha = {100 * args.alpha:g}%):")
    print(
        f"  {'target':<10}{'statistic':>11}  {'df':>3}  {'p.asym%':>9}  "
        f"{'p.perm%':>9}  {'perms':>7}  {'fail':>5}"
    )
    for target, res in results.items():
        p_perm = f"{100 * res.p_permutation:>9.2f}" if res.p_permutation is not None else f"{'-':>9}"
        perms = f"{res.permutations_used:>7}" if res.permutations_used is not None else f"{'-':>7}"
        fails = f"{res.permutation_failures:>5}" if res.p_permutation is not None else f"{'-':>5}"
        print(
            f"  {target:<10}{res.statistic:>11.4f}  {res.df:>3}  "
            f"{100 * res.p_asymptotic:>9.2f}  {p_perm}  {perms}  {fails}"
        )


def _cmd_test(args) -> int:
    value_columns = tuple(col.strip() for col in args.values.split(",") if col.strip())
    factor_columns = tuple(col.strip() for col in args.factors.split(",") if col.strip())
    if not value_columns:
        raise ConfigError("--values must name at least one column")
    if len(factor_columns) not in (1, 2):
        raise ConfigError("--factors must name one or two columns")
    if args.permutations < 1:
        raise ConfigError("--permutations must be >= 1")
    if not 0.0 < args.alpha < 1.0:
        raise ConfigError("--alpha must be in (0, 1)")

    spec = IngestSpec(
        path=args.data,
        value_columns=value_columns,
        factor_columns=factor_columns,
        header=not args.no_header,
        delimiter=args.delimiter,
        levels=_parse_levels(args.levels, len(factor_columns)),
    )
    groups, cells = load_dataset(spec)

    n_factor_levels = []
    for factor_idx in range(len(factor_columns)):
        n_factor_levels.append(len({cell.levels[factor_idx] for cell in cells}))
    contrast = _resolve_contrast(args, cells, n_factor_levels)
    effect = args.effect or ("group" if len(factor_columns) == 1 else None)

    target_map = {"both": ("mcv", "std_mean"), "mcv": ("mcv",), "stdmean": ("std_mean",)}
    targets = target_map[args.target]
    methods = ("asymptotic", "permutation") if args.method == "both" else (args.method,)
    plan = None
    if "permutation" in methods:
        plan = PermutationPlan(
            replications=args.permutations, seed=args.seed, p_value_rule=args.p_rule
        )
    results = run_tests(groups, contrast, targets, plan=plan, workers=args.workers)
    total_n = sum(g.n for g in groups)

    if args.format == "json":
        payload = _test_report_dict(args, cells, results, effect, total_n, len(value_columns))
        payload["methods"] = list(methods)
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        _print_test_text(args, cells, results, contrast, effect, len(factor_columns) == 2)
    return 0


# ---------------------------------------------------------------------------
# mcvtest simulate


def _config_from_dict(raw: dict) -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    known = {
        "scenario_id",
        "populations",
        "sizes",
        "design",
        "contrast",
        "targets",
        "methods",
        "alpha",
        "mc_replications",
        "permutations",
        "p_value_rule",
        "seed",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    try:
        populations = tuple(
            PopulationSpec(
                family=pop["family"],
                mean=np.asarray(pop["mean"], dtype=float),
                cov=np.asarray(pop["cov"], dtype=float),
                shape=pop.get("shape"),
                label=pop.get("label", ""),
            )
            for pop in raw["populations"]
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"invalid populations entry: {exc}") from exc
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc

    design = None
    custom = None
    if "design" in raw and raw["design"] is not None:
        d = raw["design"]
        try:
            design = DesignSpec(
                layout=d["layout"],
                effect=d.get("effect", "group"),
                k=d.get("k"),
                a=d.get("a"),
                b=d.get("b"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid design entry: {exc}") from exc
        except BadDesign as exc:
            raise ConfigError(str(exc)) from exc
    if "contrast" in raw and raw["contrast"] is not None:
        custom = np.asarray(raw["contrast"], dtype=float)

    try:
        plan = PermutationPlan(
            replications=int(raw.get("permutations", 1000)),
            p_value_rule=raw.get("p_value_rule", "add-one"),
        )
    except InvalidPlan as exc:
        raise ConfigError(str(exc)) from exc

    return ScenarioConfig(
        scenario_id=str(raw.get("scenario_id", "custom")),
        populations=populations,
        sizes=tuple(int(m) for m in raw.get("sizes", ())),
        design=design,
        custom_contrast=custom,
        targets=tuple(raw.get("targets", ("mcv", "std_mean"))),
        methods=tuple(raw.get("methods", ("asymptotic", "permutation"))),
        alpha=float(raw.get("alpha", 0.05)),
        mc_replications=int(raw.get("mc_replications", 1000)),
        permutation_plan=plan,
        seed=int(raw.get("seed", 0)),
    )


def _cmd_simulate(args) -> int:
    if args.preset:
        seed = 0 if args.seed is None else args.seed
        configs = table_preset(args.preset, scale=args.scale, seed=seed)
        source = {"preset": args.preset, "scale": args.scale}
    else:
        try:
            with open(args.config, encoding="utf-8") as handle:
                raw = json.load(handle)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
        config = _config_from_dict(raw)
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        configs = [config]
        source = {"config": args.config}

    records = []
    for config in configs:
        reports = run_scenario(config, workers=args.workers)
        records.extend(report_records(config, reports))

    payload = {
        "schema": "mcvtests/simulate-report/v1",
        "command": "simulate",
        "seed": args.seed,
        "records": records,
        **source,
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    if args.format == "json":
        print(text)
    else:
        print(format_records(records))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "test":
            return _cmd_test(args)
        return _cmd_simulate(args)
    except USAGE_ERRORS as exc:
        print(f"mcvtest: error: {exc}", file=sys.stderr)
        return 1
    except MCVError as exc:
        print(f"mcvtest: estimation error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
