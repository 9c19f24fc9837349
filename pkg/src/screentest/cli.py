"""Command-line interface: ``screentest <command> [options]``.

Commands: eval, repeat, discharge, cohort, simulate, curves. Each accepts
``--format table`` (human, 4 significant digits) or ``--format json``
(machine, full precision, stable key order). Exit status is 0 on success,
1 on invalid input and 2 on I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from . import __version__
from .bayes import (
    DEFAULT_CAP,
    DEFAULT_TOLERANCE,
    KINDS,
    RepeatPlan,
    discharge_table,
    max_prevalence_for_k,
    posterior_all_negative,
    posterior_curve,
    posterior_first_positive_at,
)
from .cohort import (
    COUNTING_MODES,
    builtin_diamond_princess,
    dump_series,
    emit_report,
    evaluate_testing_policy,
    load_series,
)
from .simulate import (
    RNG_ALGORITHM,
    TrialConfig,
    estimate_posterior_all_negative,
    estimate_posterior_first_positive,
    simulate_cohort_screen,
)
from .testmodel import (
    PRESETS,
    CohortState,
    DiagnosticTest,
    expected_false_negatives,
    expected_false_positives,
    false_count_grid,
    get_preset,
    is_informative,
    likelihood_ratio,
)

SCHEMA_VERSION = 1
BUILTINS = {"diamond-princess": builtin_diamond_princess}
GRIDS = (
    "fn-vs-sensitivity",
    "fp-vs-specificity",
    "first-positive-surface",
    "all-negative-surface",
    "first-positive-vs-prevalence",
    "all-negative-vs-prevalence",
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (0.0 <= value <= 1.0):
        raise argparse.ArgumentTypeError(f"probability out of range [0, 1]: {text}")
    return value


def _probability_list(text: str) -> list[float]:
    return [_probability(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"values must be integers >= 1: {text!r}")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not (0 <= value < 1 << 64):
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def _resolve_test(args) -> DiagnosticTest:
    custom = args.sensitivity is not None or args.specificity is not None
    if custom:
        if args.sensitivity is None or args.specificity is None:
            raise UsageError("--sensitivity and --specificity must be given together")
        return DiagnosticTest(args.sensitivity, args.specificity, "custom")
    return get_preset(args.test)


def _test_dict(test: DiagnosticTest) -> dict:
    return {"label": test.label, "sensitivity": test.sensitivity, "specificity": test.specificity}


def _sig4(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, int):
        return str(x)
    return f"{x:.4g}"


def _count(x: float) -> str:
    # counts keep their integer part; only the fraction is rounded
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _emit(args, payload: dict, table: str) -> None:
    if args.format == "json":
        payload = {"command": args.command, "schema_version": SCHEMA_VERSION, **payload}
        sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n")
    else:
        sys.stdout.write(table if table.endswith("\n") else table + "\n")


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> None:
    test = _resolve_test(args)
    if (args.infected is None) == (args.prevalence is None):
        raise UsageError("give exactly one of --infected or --prevalence")
    if args.infected is not None:
        state = CohortState(0, args.population, args.infected)
    else:
        state = CohortState.from_prevalence(args.population, args.prevalence)
    fp = expected_false_positives(state, test)
    fn = expected_false_negatives(state, test)
    payload = {
        "test": _test_dict(test),
        "population": state.total,
        "infected": state.infected,
        "healthy": state.healthy,
        "prevalence": state.prevalence,
        "expected_false_positives": fp,
        "expected_false_negatives": fn,
    }
    table = (
        f"test={test.label} sensitivity={_sig4(test.sensitivity)} specificity={_sig4(test.specificity)}\n"
        f"population={_count(state.total)} infected={_count(state.infected)} "
        f"healthy={_count(state.healthy)} prevalence={_sig4(state.prevalence)}\n"
        f"fp={_count(fp)}\nfn={_count(fn)}\n"
    )
    _emit(args, payload, table)


def cmd_repeat(args) -> None:
    test = _resolve_test(args)
    kinds = KINDS if args.kind == "both" else (args.kind,)
    results = []
    for p in args.prevalence:
        for k in args.k:
            plan = RepeatPlan(test, p, k)
            row = {"prevalence": p, "k": k}
            if "first-positive" in kinds:
                row["first_positive"] = posterior_first_positive_at(plan)
            if "all-negative" in kinds:
                row["all_negative"] = posterior_all_negative(plan)
            results.append(row)
    lr = likelihood_ratio(test)
    payload = {
        "test": _test_dict(test),
        "likelihood_ratio": None if lr != lr or lr == float("inf") else lr,
        "informative": is_informative(test),
        "results": results,
    }
    cols = ["prevalence", "k"] + [k.replace("-", "_") for k in kinds]
    table = _table(cols, [[_sig4(r[c]) for c in cols] for r in results])
    _emit(args, payload, table)


def cmd_discharge(args) -> None:
    test = _resolve_test(args)
    rows = discharge_table(test, args.prevalence, args.tolerance, args.cap)
    informative = is_informative(test)
    out = []
    for r in rows:
        k = r.required_negatives
        limit_k = limit_prev = None
        if informative and k is not None:
            limit_k = max_prevalence_for_k(test, k, args.tolerance)
            if k > 1:
                limit_prev = max_prevalence_for_k(test, k - 1, args.tolerance)
        out.append(
            {
                "prevalence": r.prevalence,
                "required_negatives": k,
                "achieved_miss_probability": r.achieved_miss_probability,
                "max_prevalence_at_k": limit_k,
                "max_prevalence_at_k_minus_1": limit_prev,
            }
        )
    payload = {"test": _test_dict(test), "tolerance": args.tolerance, "cap": args.cap, "rows": out}
    header = ["prevalence", "k", "miss_prob", "max_prev@k", "max_prev@k-1"]
    body = [
        [
            _sig4(o["prevalence"]),
            "unreachable" if o["required_negatives"] is None else str(o["required_negatives"]),
            _sig4(o["achieved_miss_probability"]),
            _sig4(o["max_prevalence_at_k"]),
            _sig4(o["max_prevalence_at_k_minus_1"]),
        ]
        for o in out
    ]
    table = (
        f"test={test.label} tolerance={_sig4(args.tolerance)} (miss probability <= tolerance counts as met)\n"
        + _table(header, body)
    )
    _emit(args, payload, table)


def cmd_cohort(args) -> None:
    test = _resolve_test(args)
    if (args.builtin is None) == (args.input is None):
        raise UsageError("give exactly one of --builtin or --input")
    if args.builtin is not None:
        series = BUILTINS[args.builtin](allocation=args.allocation, counting_mode=args.mode)
    else:
        series = load_series(args.input).with_mode(args.mode)
    if args.export_series:
        try:
            with open(args.export_series, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_series(series))
        except OSError as exc:
            raise OSError(f"cannot write {args.export_series}: {exc.strerror or exc}") from exc
    if not series.records:
        raise UsageError("series has no records")
    start = args.start_day if args.start_day is not None else series.days[0]
    evaluation = evaluate_testing_policy(series, test, start)
    written = []
    if args.out is not None:
        written = emit_report(evaluation, args.report, args.out)
    rows = [
        {
            "day": r.day,
            "population": r.population,
            "infected": r.infected,
            "prevalence": r.prevalence,
            "expected_false_positives": r.expected_false_positives,
            "expected_false_negatives": r.expected_false_negatives,
        }
        for r in evaluation.rows
    ]
    payload = {
        "series": series.name,
        "counting_mode": series.counting_mode,
        "initial_population": series.initial_population,
        "total_confirmed": series.total_confirmed,
        "start_day": start,
        "test": _test_dict(test),
        "rows": rows,
        "notes": list(evaluation.notes),
        "missed_carriers": evaluation.missed_carriers,
        "files": [p.name for p in written],
    }
    header = ["day", "N", "N_s", "prevalence", "fp", "fn"]
    body = [
        [str(r["day"]), _count(r["population"]), _count(r["infected"]), _sig4(r["prevalence"]),
         _count(r["expected_false_positives"]), _count(r["expected_false_negatives"])]
        for r in rows
    ]
    table = (
        f"series={series.name} mode={series.counting_mode} test={test.label} start_day={start}\n"
        + _table(header, body)
        + "".join(f"note: {n}\n" for n in evaluation.notes)
        + "".join(f"wrote {p}\n" for p in written)
    )
    _emit(args, payload, table)


def cmd_simulate(args) -> None:
    test = _resolve_test(args)
    common = {"test": _test_dict(test), "seed": args.seed, "rng": RNG_ALGORITHM}
    if args.kind == "screen":
        t = simulate_cohort_screen(args.population, args.prevalence, test, args.seed)
        state = CohortState.from_prevalence(args.population, args.prevalence)
        payload = {
            **common,
            "population": args.population,
            "prevalence": args.prevalence,
            "true_positives": t.true_positives,
            "false_positives": t.false_positives,
            "true_negatives": t.true_negatives,
            "false_negatives": t.false_negatives,
            "analytic_false_positives": expected_false_positives(state, test),
            "analytic_false_negatives": expected_false_negatives(state, test),
        }
        table = (
            f"seed={args.seed} population={args.population} prevalence={_sig4(args.prevalence)} test={test.label}\n"
            f"tp={t.true_positives} fp={t.false_positives} tn={t.true_negatives} fn={t.false_negatives}\n"
            f"expected fp={_count(payload['analytic_false_positives'])} "
            f"fn={_count(payload['analytic_false_negatives'])}\n"
        )
        _emit(args, payload, table)
        return

    config = TrialConfig(test, args.prevalence, args.k, args.trials, args.seed)
    plan = RepeatPlan(test, args.prevalence, args.k)
    if args.kind == "first-positive":
        est = estimate_posterior_first_positive(config)
        analytic = posterior_first_positive_at(plan)
    else:
        est = estimate_posterior_all_negative(config)
        analytic = posterior_all_negative(plan)
    z = None
    if est.estimate is not None and est.standard_error:
        z = (est.estimate - analytic) / est.standard_error
    payload = {
        **common,
        "kind": args.kind,
        "prevalence": args.prevalence,
        "k": args.k,
        "trials": args.trials,
        "estimate": est.estimate,
        "standard_error": est.standard_error,
        "conditioning_hits": est.conditioning_hits,
        "infected_hits": est.infected_hits,
        "analytic": analytic,
        "z_score": z,
        "warning": est.warning,
    }
    table = (
        f"seed={args.seed} trials={args.trials} kind={args.kind} k={args.k} "
        f"prevalence={_sig4(args.prevalence)} test={test.label}\n"
        f"estimate={_sig4(est.estimate)} se={_sig4(est.standard_error)} hits={est.conditioning_hits}\n"
        f"analytic={_sig4(analytic)} z={_sig4(z)}\n"
        + (f"warning: {est.warning}\n" if est.warning else "")
    )
    _emit(args, payload, table)


def _steps(n: int) -> list[float]:
    return [i / n for i in range(n + 1)]


def cmd_curves(args) -> None:
    grid = args.grid
    if grid in ("fn-vs-sensitivity", "fp-vs-specificity"):
        prevalences = args.prevalence or [1e-4, 0.01, 0.1, 0.25, 0.5]
        raw = false_count_grid(args.population, prevalences, _steps(args.steps), grid[:2])
        header = ["prevalence", "sensitivity" if grid.startswith("fn") else "specificity", grid[:2]]
        rows = [list(r) for r in raw]
        meta = {"population": args.population}
    elif grid.endswith("-surface"):
        kind = grid.removesuffix("-surface")
        fn = posterior_first_positive_at if kind == "first-positive" else posterior_all_negative
        default_p = [0.1, 0.25, 0.85] if kind == "first-positive" else [0.01, 0.25, 0.85]
        prevalences = sorted(args.prevalence or default_p)
        ks = sorted(set(args.k or [1, 3]))
        # open interval keeps both outcomes possible at every grid point
        axis = [i / args.steps for i in range(1, args.steps)]
        header = ["k", "prevalence", "sensitivity", "specificity", "probability"]
        rows = [
            [k, p, sen, spe, fn(RepeatPlan(DiagnosticTest(sen, spe), p, k))]
            for k in ks for p in prevalences for sen in axis for spe in axis
        ]
        meta = {}
    else:
        kind = grid.removesuffix("-vs-prevalence")
        test = _resolve_test(args)
        ks = args.k or [1, 2, 3, 4, 5, 6]
        points = posterior_curve(test, args.prevalence or _steps(args.steps), ks, kind)
        header = ["k", "prevalence", "probability"]
        rows = [list(p) for p in points]
        meta = {"test": _test_dict(test)}

    if args.format == "json":
        text = json.dumps(
            {"command": "curves", "schema_version": SCHEMA_VERSION, "grid": grid, **meta,
             "columns": header, "rows": rows},
            indent=2, sort_keys=True,
        ) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([[repr(c) if isinstance(c, float) else c for c in r] for r in rows])
        text = buf.getvalue()
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
        sys.stdout.write(f"wrote {len(rows)} rows to {args.out}\n")
    else:
        sys.stdout.write(text)


def _add_test_options(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("test")
    g.add_argument("--test", default="hutchison", help=f"preset name ({', '.join(sorted(PRESETS))})")
    g.add_argument("--sensitivity", type=_probability, help="custom test sensitivity (with --specificity)")
    g.add_argument("--specificity", type=_probability, help="custom test specificity (with --sensitivity)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="screentest", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    fmt = argparse.ArgumentParser(add_help=False)
    fmt.add_argument("--format", choices=("table", "json"), default="table", help="output mode")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", parents=[fmt], help="expected false counts if everyone is tested once")
    _add_test_options(p)
    p.add_argument("--population", type=_nonneg_float, required=True)
    p.add_argument("--infected", type=_nonneg_float)
    p.add_argument("--prevalence", type=_probability)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("repeat", parents=[fmt], help="posterior infection probability after k tests")
    _add_test_options(p)
    p.add_argument("--prevalence", type=_probability_list, required=True, help="comma-separated")
    p.add_argument("--k", type=_int_list, required=True, help="comma-separated repetition counts")
    p.add_argument("--kind", choices=(*KINDS, "both"), default="both")
    p.set_defaults(func=cmd_repeat)

    p = sub.add_parser(
        "discharge", parents=[fmt],
        help="consecutive negatives needed before discharge",
        description="Smallest k whose miss probability is at or below the tolerance "
        "(a value exactly equal to the tolerance counts as met).",
    )
    _add_test_options(p)
    p.add_argument("--prevalence", type=_probability_list, required=True, help="comma-separated")
    p.add_argument("--tolerance", type=_probability, default=DEFAULT_TOLERANCE)
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP)
    p.set_defaults(func=cmd_discharge)

    p = sub.add_parser("cohort", parents=[fmt], help="daily mass testing of a cohort series")
    _add_test_options(p)
    src = p.add_argument_group("series")
    src.add_argument("--builtin", choices=sorted(BUILTINS))
    src.add_argument("--input", help="series file (initial_population=<int> header, day,new_confirmed rows)")
    src.add_argument("--allocation", choices=("terminal", "uniform"), default="terminal",
                     help="builtin only: placement of the days 33-44 total")
    p.add_argument("--mode", choices=COUNTING_MODES, default="daily", help="counting mode")
    p.add_argument("--start-day", type=int, default=None, help="first tested day (default: first day)")
    p.add_argument("--out", help="directory for emitted series files")
    p.add_argument("--report", choices=("csv", "json", "both"), default="both")
    p.add_argument("--export-series", help="write the (validated) input series to this path")
    p.set_defaults(func=cmd_cohort)

    p = sub.add_parser("simulate", parents=[fmt], help="seeded Monte Carlo oracle")
    _add_test_options(p)
    p.add_argument("--kind", choices=("screen", *KINDS), default="all-negative")
    p.add_argument("--prevalence", type=_probability, required=True)
    p.add_argument("--k", type=_positive_int, default=1)
    p.add_argument("--trials", type=_positive_int, default=1_000_000)
    p.add_argument("--population", type=_positive_int, default=100_000, help="screen only")
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curves", parents=[fmt], help="plot-ready data grids")
    _add_test_options(p)
    p.add_argument("grid", choices=GRIDS)
    p.add_argument("--prevalence", type=_probability_list)
    p.add_argument("--k", type=_int_list)
    p.add_argument("--steps", type=_positive_int, default=100, help="grid resolution on [0, 1]")
    p.add_argument("--population", type=_nonneg_float, default=10_000)
    p.add_argument("--out", help="write to file instead of stdout")
    p.set_defaults(func=cmd_curves)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except OSError as exc:
        print(f"screentest: I/O error: {exc}", file=sys.stderr)
        return 2
    except (UsageError, ValueError) as exc:
        print(f"screentest: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
