"""Day-indexed cohorts, the Diamond Princess series, and daily mass-testing evaluation.

A ``CohortSeries`` holds the number of newly confirmed cases per day and the
starting head count. ``evolve`` turns it into one ``CohortState`` per record
under one of two readings of the counts:

``daily``
    Infected on day t are that day's new confirmations; everyone confirmed
    up to and including day t has left, so N(t) = N(0) - cumulative(t).
``cumulative``
    Confirmed cases are kept aboard as carriers: N(t) = N(0) and
    infected = cumulative(t).

Series text format (UTF-8, ``\\n`` line endings)::

    initial_population=3711
    name=diamond-princess          (optional)
    counting_mode=daily            (optional)
    day,new_confirmed              (optional column header)
    1,0
    2,0
    ...
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal

from .testmodel import (
    CohortState,
    DiagnosticTest,
    expected_false_negatives,
    expected_false_positives,
)

__all__ = [
    "COUNTING_MODES",
    "DailyRecord",
    "CohortSeries",
    "PolicyRow",
    "PolicyEvaluation",
    "SeriesFormatError",
    "builtin_diamond_princess",
    "load_series",
    "dump_series",
    "evolve",
    "evaluate_testing_policy",
    "missed_carrier_comparison",
    "report_document",
    "REPORTED_MISSED_CARRIERS",
    "emit_report",
    "format_number",
]

CountingMode = Literal["daily", "cumulative"]
COUNTING_MODES = ("daily", "cumulative")
COLUMN_HEADER = "day,new_confirmed"


class SeriesFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} at line {line}" if line is not None else message)


@dataclass(frozen=True)
class DailyRecord:
    day: int
    new_confirmed: int

    def __post_init__(self):
        if int(self.day) != self.day or self.day < 0:
            raise ValueError(f"day must be a nonnegative integer, got {self.day!r}")
        if int(self.new_confirmed) != self.new_confirmed or self.new_confirmed < 0:
            raise ValueError(f"new_confirmed must be a nonnegative integer, got {self.new_confirmed!r}")


@dataclass(frozen=True)
class CohortSeries:
    name: str
    initial_population: int
    records: tuple[DailyRecord, ...]
    counting_mode: CountingMode = "daily"

    def __post_init__(self):
        if self.counting_mode not in COUNTING_MODES:
            raise ValueError(f"counting_mode must be one of {COUNTING_MODES}, got {self.counting_mode!r}")
        if int(self.initial_population) != self.initial_population or self.initial_population <= 0:
            raise ValueError(f"initial_population must be a positive integer, got {self.initial_population!r}")
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        cumulative = 0
        prev_day = None
        for r in records:
            if prev_day is not None and r.day <= prev_day:
                raise ValueError(f"days not strictly increasing at day {r.day}")
            prev_day = r.day
            cumulative += r.new_confirmed
            if cumulative > self.initial_population:
                raise ValueError(
                    f"cumulative confirmed ({cumulative}) exceeds initial population "
                    f"({self.initial_population}) on day {r.day}"
                )

    @property
    def days(self) -> list[int]:
        return [r.day for r in self.records]

    @property
    def total_confirmed(self) -> int:
        return sum(r.new_confirmed for r in self.records)

    def with_mode(self, counting_mode: CountingMode) -> "CohortSeries":
        return CohortSeries(self.name, self.initial_population, self.records, counting_mode)


# Confirmed cases by day; day 0 is Jan 19, 2020 (3711 aboard: 2666 guests, 1045 crew).
# Days 1-16 had none. The source gives a single figure of 84 for days 33-44.
_DIAMOND_PRINCESS_POPULATION = 3711
_DIAMOND_PRINCESS_CASES = {
    17: 10, 18: 10, 19: 41, 20: 3, 21: 0, 22: 6, 23: 65, 24: 39,
    25: 0, 26: 47, 27: 0, 28: 134, 29: 0, 30: 99, 31: 88, 32: 79,
}
_DIAMOND_PRINCESS_TAIL = (33, 44, 84)

# Missed-carrier figures quoted with a dataset, checked against our own numbers in every report.
# The Diamond Princess figure (300 on day 30) is reproduced by neither counting mode.
REPORTED_MISSED_CARRIERS: dict[str, tuple[int, float]] = {"diamond-princess": (30, 300.0)}


def builtin_diamond_princess(
    allocation: Literal["terminal", "uniform"] = "terminal",
    counting_mode: CountingMode = "daily",
) -> CohortSeries:
    """Diamond Princess confirmed cases, days 1-44.

    The 84 cases reported for days 33-44 as one figure are placed on day 44
    (``terminal``) or spread as 7 per day (``uniform``).
    """
    first, last, tail_total = _DIAMOND_PRINCESS_TAIL
    n_tail = last - first + 1
    if allocation == "terminal":
        tail = {d: 0 for d in range(first, last)} | {last: tail_total}
    elif allocation == "uniform":
        if tail_total % n_tail:
            raise ValueError("uniform allocation requires an even split")
        tail = {d: tail_total // n_tail for d in range(first, last + 1)}
    else:
        raise ValueError(f"allocation must be 'terminal' or 'uniform', got {allocation!r}")
    cases = {d: 0 for d in range(1, 17)} | _DIAMOND_PRINCESS_CASES | tail
    records = tuple(DailyRecord(d, cases[d]) for d in sorted(cases))
    return CohortSeries("diamond-princess", _DIAMOND_PRINCESS_POPULATION, records, counting_mode)


def _parse_int(text: str, what: str, line: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise SeriesFormatError(f"{what} is not an integer: {text.strip()!r}", line) from None


def load_series(source: str | os.PathLike | io.TextIOBase, name: str | None = None) -> CohortSeries:
    """Parse and validate a series from a path, an open text file, or a string.

    Strings containing a newline are parsed as content; other strings are paths.
    """
    if isinstance(source, io.TextIOBase):
        text = source.read()
        default_name = getattr(source, "name", "series")
    elif isinstance(source, str) and "\n" in source:
        text = source
        default_name = "series"
    else:
        path = Path(source)
        text = path.read_text(encoding="utf-8")
        default_name = path.name.split(".")[0]

    meta: dict[str, str] = {}
    records: list[DailyRecord] = []
    cumulative = 0
    population = None
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not records and not seen_header and "=" in line:
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
            if key.strip() == "initial_population":
                population = _parse_int(value, "initial_population", lineno)
                if population <= 0:
                    raise SeriesFormatError("initial_population must be positive", lineno)
            continue
        if population is None:
            raise SeriesFormatError("missing 'initial_population=<int>' header", lineno)
        if line.replace(" ", "") == COLUMN_HEADER and not records:
            seen_header = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SeriesFormatError(f"expected 2 columns (day,new_confirmed), got {len(parts)}", lineno)
        day = _parse_int(parts[0], "day", lineno)
        count = _parse_int(parts[1], "new_confirmed", lineno)
        if day < 0:
            raise SeriesFormatError(f"negative day {day}", lineno)
        if count < 0:
            raise SeriesFormatError(f"negative new_confirmed {count} on day {day}", lineno)
        if records and day <= records[-1].day:
            raise SeriesFormatError("days not strictly increasing", lineno)
        cumulative += count
        if cumulative > population:
            raise SeriesFormatError(
                f"cumulative confirmed {cumulative} exceeds initial population {population} on day {day}",
                lineno,
            )
        records.append(DailyRecord(day, count))

    if population is None:
        raise SeriesFormatError("missing 'initial_population=<int>' header")
    mode = meta.get("counting_mode", "daily")
    if mode not in COUNTING_MODES:
        raise SeriesFormatError(f"unknown counting_mode {mode!r}")
    return CohortSeries(name or meta.get("name", default_name), population, tuple(records), mode)


def dump_series(series: CohortSeries) -> str:
    lines = [
        f"initial_population={series.initial_population}",
        f"name={series.name}",
        f"counting_mode={series.counting_mode}",
        COLUMN_HEADER,
    ]
    lines += [f"{r.day},{r.new_confirmed}" for r in series.records]
    return "\n".join(lines) + "\n"


def evolve(series: CohortSeries) -> list[CohortState]:
    n0 = series.initial_population
    states = []
    cumulative = 0
    for r in series.records:
        cumulative += r.new_confirmed
        if series.counting_mode == "daily":
            total, infected = n0 - cumulative, r.new_confirmed
        else:
            total, infected = n0, cumulative
        if infected > total:
            raise ValueError(
                f"day {r.day}: {infected} confirmed but only {total} remain in {series.counting_mode} mode"
            )
        states.append(CohortState(r.day, total, infected))
    return states


@dataclass(frozen=True)
class PolicyRow:
    day: int
    population: float
    infected: float
    prevalence: float
    expected_false_positives: float
    expected_false_negatives: float


@dataclass(frozen=True)
class PolicyEvaluation:
    series_name: str
    counting_mode: CountingMode
    test: DiagnosticTest
    start_day: int
    rows: tuple[PolicyRow, ...] = field(default_factory=tuple)
    notes: tuple[str, ...] = ()
    missed_carriers: dict | None = None


def evaluate_testing_policy(
    series: CohortSeries, test: DiagnosticTest, start_day: int
) -> PolicyEvaluation:
    """Expected false counts if everyone aboard is tested every day from ``start_day``."""
    days = series.days
    if not days or not (days[0] <= start_day <= days[-1]):
        span = f"{days[0]}-{days[-1]}" if days else "empty"
        raise ValueError(f"start_day {start_day} outside series range ({span})")
    rows = []
    for state in evolve(series):
        if state.day < start_day:
            continue
        rows.append(
            PolicyRow(
                state.day,
                state.total,
                state.infected,
                state.prevalence,
                expected_false_positives(state, test),
                expected_false_negatives(state, test),
            )
        )
    notes: tuple[str, ...] = ()
    comparison = None
    if series.name in REPORTED_MISSED_CARRIERS:
        day, reported = REPORTED_MISSED_CARRIERS[series.name]
        comparison = missed_carrier_comparison(series, test, day, reported)
        if not comparison["reproduced"]:
            m = comparison["modes"]
            notes = (
                f"reported {reported:g} missed carriers on day {day} is not reproduced: "
                f"daily mode gives {format_number(m['daily']['at_day'])} on day {day}, "
                f"cumulative mode gives {format_number(m['cumulative']['at_day'])} on day {day} "
                f"and {format_number(m['cumulative']['at_final_day'])} on day {comparison['final_day']}",
            )
    return PolicyEvaluation(
        series.name, series.counting_mode, test, start_day, tuple(rows), notes, comparison
    )


def missed_carrier_comparison(
    series: CohortSeries,
    test: DiagnosticTest,
    day: int,
    reported: float | None = None,
) -> dict:
    """Expected false negatives at ``day`` and at the last day under both counting modes."""
    last_day = series.days[-1]
    out: dict = {"day": day, "final_day": last_day, "modes": {}}
    for mode in COUNTING_MODES:
        by_day = {s.day: s for s in evolve(series.with_mode(mode))}
        out["modes"][mode] = {
            "at_day": expected_false_negatives(by_day[day], test),
            "at_final_day": expected_false_negatives(by_day[last_day], test),
        }
    if reported is not None:
        out["reported"] = reported
        out["reproduced"] = any(
            abs(v - reported) <= 0.5 for m in out["modes"].values() for v in m.values()
        )
    return out


def format_number(x: float) -> str:
    if x == 0:
        return "0"
    return f"{x:.6g}"


_SERIES_COLUMNS = {
    "prevalence": ("day", "population", "infected", "prevalence"),
    "fp_pop": ("day", "population", "expected_false_positives"),
    "fn": ("day", "infected", "expected_false_negatives"),
}


def _series_csv(evaluation: PolicyEvaluation, which: str) -> str:
    cols = _SERIES_COLUMNS[which]
    lines = [",".join(cols)]
    for row in evaluation.rows:
        cells = []
        for c in cols:
            v = getattr(row, c)
            cells.append(str(v) if c == "day" else format_number(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def report_document(evaluation: PolicyEvaluation, extra: dict | None = None) -> dict:
    doc = {
        "series": evaluation.series_name,
        "counting_mode": evaluation.counting_mode,
        "start_day": evaluation.start_day,
        "test": {
            "label": evaluation.test.label,
            "sensitivity": evaluation.test.sensitivity,
            "specificity": evaluation.test.specificity,
        },
        "inputs": "reported confirmed counts, not true carrier counts",
        "columns": {k: list(v) for k, v in _SERIES_COLUMNS.items()},
        "rows": [
            {
                "day": r.day,
                "population": r.population,
                "infected": r.infected,
                "prevalence": r.prevalence,
                "expected_false_positives": r.expected_false_positives,
                "expected_false_negatives": r.expected_false_negatives,
            }
            for r in evaluation.rows
        ],
        "notes": list(evaluation.notes),
        "missed_carriers": evaluation.missed_carriers,
    }
    if extra:
        doc.update(extra)
    return doc


def emit_report(
    evaluation: PolicyEvaluation,
    fmt: Literal["csv", "json", "both"] = "csv",
    destination: str | os.PathLike = ".",
    extra: dict | None = None,
) -> list[Path]:
    """Write the prevalence, population/false-positive and false-negative series.

    ``csv`` writes ``<name>.prevalence.csv``, ``<name>.fp_pop.csv`` and
    ``<name>.fn.csv``; ``json`` writes ``<name>.report.json`` bundling them
    with metadata. Output is byte-stable for identical inputs.
    """
    if fmt not in ("csv", "json", "both"):
        raise ValueError(f"format must be 'csv', 'json' or 'both', got {fmt!r}")
    dest = Path(destination)
    try:
        dest.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {dest}: {exc.strerror or exc}") from exc
    written = []
    stem = evaluation.series_name
    if fmt in ("csv", "both"):
        for which in _SERIES_COLUMNS:
            path = dest / f"{stem}.{which}.csv"
            _write(path, _series_csv(evaluation, which))
            written.append(path)
    if fmt in ("json", "both"):
        path = dest / f"{stem}.report.json"
        _write(path, json.dumps(report_document(evaluation, extra), indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written
