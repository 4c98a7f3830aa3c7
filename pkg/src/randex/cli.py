"""Command-line front end.

Three subcommands: ``test`` runs a randomization test on an observed-data
CSV, ``theory`` evaluates closed-form finite-population quantities on a
potential-outcome CSV, and ``simulate`` runs a named or user-configured
scenario study, writing per-statistic JSON, plot-ready histogram CSVs, and a
rendered figure.

Every command needs an explicit seed, from ``--seed`` or the RANDEX_SEED
environment variable; there is no silent nondeterminism. Output documents
carry no timestamps, so the same seed and flags give byte-identical files.

Exit codes: 0 success, 2 input error, 3 statistical precondition violated,
4 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import report
from .asymptotics import (
    asymptotic_pvalue,
    build_context,
    chisq_cdf,
    mixture_tail,
    x2_null_mixture,
)
from .design import Design
from .errors import (
    CapExceeded,
    DatasetFormatError,
    DimensionMismatch,
    InvalidScenario,
    RandexError,
    UnknownExample,
    UnknownScenario,
    UnknownStatistic,
)
from .finitepop import (
    PotentialOutcomeTable,
    enumerated_expected_ss,
    expected_ss,
    ms_gap,
    summarize_population,
    two_treatment_constants,
)
from .frt import FrtConfig, run_frt
from .scenarios import ScenarioSpec, builtin_scenarios, get_scenario, run_study
from .stats import ObservedDataset

SCHEMA = "randex/1"
MIXTURE_GRID = [x / 2.0 for x in range(1, 25)]  # 0.5, 1.0, ..., 12.0

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_CONFIG = 4


class CliConfigError(RandexError):
    """Bad or missing command-line configuration."""


def parse_dataset(path: str | Path) -> tuple[ObservedDataset, dict[str, int], list[str]]:
    """Read a `treatment,outcome` CSV into a dataset plus its label mapping.

    Treatment labels are arbitrary strings mapped to 1..J in order of first
    appearance. Raises DatasetFormatError with the offending row number.
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as error:
        raise DatasetFormatError(f"cannot read {path}: {error.strerror}") from error
    except UnicodeDecodeError as error:
        raise DatasetFormatError(f"{path} is not UTF-8 text") from error
    rows = list(csv.reader(lines))
    if not rows or [c.strip().lower() for c in rows[0]] != ["treatment", "outcome"]:
        raise DatasetFormatError("expected header 'treatment,outcome'", row=1)
    mapping: dict[str, int] = {}
    labels: list[int] = []
    outcomes: list[float] = []
    for number, record in enumerate(rows[1:], start=2):
        if not record or all(not field.strip() for field in record):
            continue
        normalized = [c.strip().lower() for c in record]
        if normalized == ["treatment", "outcome"]:
            raise DatasetFormatError("duplicate header", row=number)
        if len(record) != 2:
            raise DatasetFormatError(
                f"expected 2 fields, found {len(record)}", row=number
            )
        label = record[0].strip()
        if not label:
            raise DatasetFormatError("empty treatment label", row=number)
        try:
            value = float(record[1])
        except ValueError:
            raise DatasetFormatError(
                f"non-numeric outcome {record[1].strip()!r}", row=number
            ) from None
        if label not in mapping:
            mapping[label] = len(mapping) + 1
        labels.append(mapping[label])
        outcomes.append(value)
    if not outcomes:
        raise DatasetFormatError("no data rows", row=2)
    if len(mapping) < 2:
        raise DatasetFormatError("J >= 2 required: found a single treatment level")
    data = ObservedDataset(outcomes=outcomes, treatments=labels)
    return data, mapping, []


def parse_population(path: str | Path) -> PotentialOutcomeTable:
    """Read a headerless N x J numeric CSV as a potential-outcome table."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as error:
        raise DatasetFormatError(f"cannot read {path}: {error.strerror}") from error
    table: list[list[float]] = []
    width = None
    for number, record in enumerate(csv.reader(lines), start=1):
        if not record or all(not field.strip() for field in record):
            continue
        try:
            values = [float(field) for field in record]
        except ValueError:
            raise DatasetFormatError("non-numeric entry", row=number) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DatasetFormatError(
                f"expected {width} columns, found {len(values)}", row=number
            )
        table.append(values)
    if not table:
        raise DatasetFormatError("no data rows", row=1)
    return PotentialOutcomeTable(table=table)


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("RANDEX_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliConfigError(f"RANDEX_SEED={env!r} is not an integer") from None
    raise CliConfigError("no seed given: pass --seed or set RANDEX_SEED")


def _parse_statistic(tokens: list[str]) -> tuple[str, tuple[int, int] | None]:
    name = tokens[0].lower()
    if name == "pairwise":
        if len(tokens) != 3:
            raise CliConfigError("usage: --statistic pairwise J J'")
        try:
            pair = (int(tokens[1]), int(tokens[2]))
        except ValueError:
            raise CliConfigError("pairwise group labels must be integers") from None
        return name, pair
    if len(tokens) != 1 or name not in ("f", "x2", "t2", "dim"):
        raise CliConfigError(
            "statistic must be one of: f, x2, t2, dim, pairwise J J'"
        )
    return name, None


def _emit(doc: dict, out: Path | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_test(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    name, pair = _parse_statistic(args.statistic)
    data, mapping, warnings = parse_dataset(args.input)
    mode = "exact" if args.mode == "exact" else "monte_carlo"
    config = FrtConfig(
        statistic=name,
        seed=seed,
        mode=mode,
        replications=args.reps,
        pair=pair,
        degenerate_policy=args.degenerate_policy,
    )
    result = run_frt(data, config)
    if result.degenerate:
        action = (
            "counted as extreme"
            if args.degenerate_policy == "count-extreme"
            else "skipped"
        )
        warnings.append(f"{result.degenerate} degenerate replicates {action}")
    try:
        p_asymptotic = asymptotic_pvalue(name, result.observed, data)
    except UnknownStatistic:
        p_asymptotic = None
        warnings.append(f"no asymptotic reference distribution for {name!r}")
    doc = {
        "schema": SCHEMA,
        "command": "test",
        "input": str(args.input),
        "seed": seed,
        "statistic": name if pair is None else f"pairwise({pair[0]},{pair[1]})",
        "mode": mode,
        "observed_value": result.observed,
        "p_frt": result.p_value,
        "p_asymptotic": p_asymptotic,
        "replications": result.replications,
        "degenerate_replicates": result.degenerate,
        "warnings": warnings,
        "label_mapping": mapping,
    }
    _emit(doc, args.out)
    return EXIT_OK


def _cmd_theory(args: argparse.Namespace) -> int:
    pop = parse_population(args.population)
    try:
        sizes = tuple(int(part) for part in args.design.split(","))
    except ValueError:
        raise CliConfigError(f"bad --design {args.design!r}; expected N1,...,NJ") from None
    design = Design(group_sizes=sizes)
    warnings: list[str] = []
    doc = {
        "schema": SCHEMA,
        "command": "theory",
        "input": str(args.population),
        "design": list(sizes),
        "report": args.report,
    }
    if args.report == "expectations":
        e_tre, e_res = expected_ss(pop, design)
        summary = summarize_population(pop, design)
        doc["expected_ss_treatment"] = e_tre
        doc["expected_ss_residual"] = e_res
        doc["delta"] = summary.delta
        doc["column_means"] = summary.means.tolist()
        doc["column_variances"] = summary.variances.tolist()
        if args.verify_enumerate:
            enum_tre, enum_res = enumerated_expected_ss(pop, design)
            close = abs(enum_tre - e_tre) <= 1e-8 * max(1.0, abs(e_tre)) and abs(
                enum_res - e_res
            ) <= 1e-8 * max(1.0, abs(e_res))
            doc["enumerated_ss_treatment"] = enum_tre
            doc["enumerated_ss_residual"] = enum_res
            doc["verification"] = "match" if close else "mismatch"
    elif args.report == "msgap":
        doc["ms_gap"] = ms_gap(pop, design)
    elif args.report == "constants":
        c1, c2 = two_treatment_constants(pop, design)
        doc["c1"] = c1
        doc["c2"] = c2
    else:  # mixture
        seed = _resolve_seed(args.seed)
        context = build_context(pop, design)
        mixture = x2_null_mixture(context)
        doc["seed"] = seed
        doc["weights"] = list(mixture.weights)
        table = []
        df = design.n_treatments - 1
        for i, a in enumerate(MIXTURE_GRID):
            estimate = mixture_tail(mixture, a, draws=args.tail_draws, seed=seed + i)
            table.append(
                {
                    "a": a,
                    "tail": estimate.value,
                    "se": estimate.se,
                    "chisq_tail": 1.0 - chisq_cdf(a, df),
                }
            )
        doc["tail_table"] = table
    doc["warnings"] = warnings
    _emit(doc, args.out)
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args.seed)
    if (args.scenario is None) == (args.config is None):
        raise CliConfigError("give exactly one of --scenario or --config")
    if args.scenario is not None:
        spec = get_scenario(args.scenario)
    else:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as error:
            raise DatasetFormatError(f"cannot read {args.config}: {error}") from error
        except json.JSONDecodeError as error:
            raise DatasetFormatError(f"bad scenario config: {error}") from error
        spec = ScenarioSpec.from_dict(raw)
    overrides = {}
    if args.datasets is not None:
        overrides["datasets"] = args.datasets
    if args.draws is not None:
        overrides["frt_draws"] = args.draws
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if overrides:
        spec = dataclasses.replace(spec, **overrides)

    names = tuple(part.strip().lower() for part in args.stats.split(",") if part.strip())
    if not names:
        raise CliConfigError("--stats must name at least one statistic")
    for name in names:
        if name not in ("f", "x2", "t2", "dim"):
            raise CliConfigError(f"unsupported study statistic {name!r}")

    studies = run_study(spec, names, seed=seed, threads=args.threads)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in names:
        result = studies[name]
        doc = {
            "schema": SCHEMA,
            "command": "simulate",
            "scenario": spec.name,
            "seed": seed,
            "statistic": name,
            "alpha": result.alpha,
            "datasets": result.datasets,
            "replications": result.frt_draws,
            "rejection_rate": result.rejection_rate,
            "rejection_rate_raw": result.rejection_rate_raw,
            "mc_se": result.mc_se,
            "histogram": list(result.histogram),
            "p_value_convention": result.p_value_convention,
            "degenerate_replicates": result.degenerate_total,
            "warnings": [],
        }
        _emit(doc, out_dir / f"{spec.name}-{name}.json")
        report.write_histogram_csv(result, out_dir / f"{spec.name}-{name}-hist.csv")
        sys.stdout.write(
            f"{spec.name} {name}: rejection rate {result.rejection_rate:.4f} "
            f"(se {result.mc_se:.4f})\n"
        )
    if args.figures:
        report.render_study_figure(studies, out_dir / f"{spec.name}-pvalues.png")
    return EXIT_OK


def _cmd_scenarios(args: argparse.Namespace) -> int:
    for name, spec in sorted(builtin_scenarios().items()):
        kind = "fixed data" if spec.fixed_data else spec.protocol
        sys.stdout.write(f"{name}  sizes={spec.sizes}  {kind}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randex",
        description="Randomization inference for completely randomized experiments.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_test = sub.add_parser("test", help="run a randomization test on a dataset CSV")
    p_test.add_argument("input", type=Path, help="CSV with header 'treatment,outcome'")
    p_test.add_argument(
        "--statistic",
        nargs="+",
        default=["f"],
        metavar=("NAME", "J"),
        help="f | x2 | t2 | dim | pairwise J J'",
    )
    p_test.add_argument("--mode", choices=["mc", "exact"], default="mc")
    p_test.add_argument("--reps", type=int, default=2000, help="Monte Carlo draws")
    p_test.add_argument("--seed", type=int, default=None)
    p_test.add_argument(
        "--degenerate-policy",
        choices=["count-extreme", "skip"],
        default="count-extreme",
    )
    p_test.add_argument("--out", type=Path, default=None, help="write JSON here")
    p_test.set_defaults(func=_cmd_test)

    p_theory = sub.add_parser(
        "theory", help="evaluate closed-form theory on a potential-outcome CSV"
    )
    p_theory.add_argument("population", type=Path, help="headerless N x J numeric CSV")
    p_theory.add_argument("--design", required=True, help="group sizes N1,...,NJ")
    p_theory.add_argument(
        "--report",
        choices=["expectations", "msgap", "constants", "mixture"],
        required=True,
    )
    p_theory.add_argument(
        "--verify-enumerate",
        action="store_true",
        help="cross-check expectations against exact enumeration",
    )
    p_theory.add_argument("--seed", type=int, default=None)
    p_theory.add_argument("--tail-draws", type=int, default=10**6)
    p_theory.add_argument("--out", type=Path, default=None)
    p_theory.set_defaults(func=_cmd_theory)

    p_sim = sub.add_parser("simulate", help="run a scenario study")
    p_sim.add_argument("--scenario", default=None, help="built-in scenario name")
    p_sim.add_argument("--config", default=None, help="scenario spec JSON file")
    p_sim.add_argument("--stats", default="f,x2", help="comma-separated statistics")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out-dir", type=Path, default=Path("."))
    p_sim.add_argument("--datasets", type=int, default=None, help="override R")
    p_sim.add_argument("--draws", type=int, default=None, help="override FRT draws M")
    p_sim.add_argument("--alpha", type=float, default=None)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument(
        "--figures",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="render the p-value histogram figure",
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_list = sub.add_parser("scenarios", help="list built-in scenarios")
    p_list.set_defaults(func=_cmd_scenarios)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DatasetFormatError as error:
        print(f"randex: input error: {error}", file=sys.stderr)
        return EXIT_INPUT
    except DimensionMismatch as error:
        print(f"randex: input error: {error}", file=sys.stderr)
        return EXIT_INPUT
    except (
        CliConfigError,
        UnknownScenario,
        UnknownExample,
        InvalidScenario,
        CapExceeded,
    ) as error:
        print(f"randex: configuration error: {error}", file=sys.stderr)
        return EXIT_CONFIG
    except RandexError as error:
        print(f"randex: {error}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
