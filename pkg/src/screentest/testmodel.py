"""Diagnostic test characteristics and expected false counts under mass testing.

A test is described by its sensitivity P(positive | infected) and its
specificity P(negative | healthy). Applying it once to everyone in a
population with ``healthy`` disease-free and ``infected`` diseased members
gives, in expectation::

    false positives = healthy  * (1 - specificity)
    false negatives = infected * (1 - sensitivity)

Counts are real-valued expectations and are never rounded here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

__all__ = [
    "DiagnosticTest",
    "CohortState",
    "HUTCHISON",
    "BIOMEDOMICS",
    "PRESETS",
    "get_preset",
    "expected_false_positives",
    "expected_false_negatives",
    "likelihood_ratio",
    "is_informative",
    "false_count_grid",
]


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class DiagnosticTest:
    """A binary test with known sensitivity and specificity."""

    sensitivity: float
    specificity: float
    label: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "sensitivity", _check_probability("sensitivity", self.sensitivity))
        object.__setattr__(self, "specificity", _check_probability("specificity", self.specificity))

    @property
    def false_negative_rate(self) -> float:
        return 1.0 - self.sensitivity

    @property
    def false_positive_rate(self) -> float:
        return 1.0 - self.specificity


@dataclass(frozen=True)
class CohortState:
    """Population snapshot for one day.

    ``healthy`` may be omitted and is then ``total - infected``. Counts are
    floats so that expected (fractional) counts fit the same type.
    """

    day: int
    total: float
    infected: float
    healthy: float | None = None

    def __post_init__(self):
        if int(self.day) != self.day or self.day < 0:
            raise ValueError(f"day must be a nonnegative integer, got {self.day!r}")
        total = float(self.total)
        infected = float(self.infected)
        if not (math.isfinite(total) and math.isfinite(infected)):
            raise ValueError("counts must be finite")
        if total < 0 or infected < 0:
            raise ValueError(f"counts must be nonnegative (total={total}, infected={infected})")
        if infected > total:
            raise ValueError(f"infected ({infected}) exceeds total ({total})")
        healthy = total - infected if self.healthy is None else float(self.healthy)
        if self.healthy is not None and infected + healthy != total:
            raise ValueError(
                f"infected + healthy must equal total ({infected} + {healthy} != {total})"
            )
        object.__setattr__(self, "day", int(self.day))
        object.__setattr__(self, "total", total)
        object.__setattr__(self, "infected", infected)
        object.__setattr__(self, "healthy", healthy)

    @classmethod
    def from_prevalence(cls, total: float, prevalence: float, day: int = 0) -> "CohortState":
        prevalence = _check_probability("prevalence", prevalence)
        return cls(day=day, total=total, infected=float(total) * prevalence)

    @property
    def prevalence(self) -> float:
        if self.total == 0:
            raise ValueError("prevalence is undefined for an empty population")
        return self.infected / self.total


# 60% / 90%: the estimate for early RT-PCR testing based on influenza-test performance.
HUTCHISON = DiagnosticTest(0.60, 0.90, "hutchison")
# 88.66% / 90.63%: IgM/IgG rapid test, estimated on 525 infected and 128 uninfected patients.
BIOMEDOMICS = DiagnosticTest(0.8866, 0.9063, "biomedomics")

PRESETS: dict[str, DiagnosticTest] = {t.label: t for t in (HUTCHISON, BIOMEDOMICS)}


def get_preset(name: str) -> DiagnosticTest:
    try:
        return PRESETS[name.strip().lower()]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ValueError(f"unknown test preset {name!r} (known: {known})") from None


def _require_population(state: CohortState) -> None:
    if state.total <= 0:
        raise ValueError(f"population on day {state.day} is empty; nothing to test")


def expected_false_positives(state: CohortState, test: DiagnosticTest) -> float:
    """Expected false positives if everyone in ``state`` is tested once."""
    _require_population(state)
    return state.healthy * (1.0 - test.specificity)


def expected_false_negatives(state: CohortState, test: DiagnosticTest) -> float:
    """Expected false negatives if everyone in ``state`` is tested once."""
    _require_population(state)
    return state.infected * (1.0 - test.sensitivity)


def likelihood_ratio(test: DiagnosticTest) -> float:
    """Odds shift against infection per negative result: spe / (1 - sen).

    Returns ``math.inf`` for a perfectly sensitive test with nonzero
    specificity and ``math.nan`` for the 0/0 case (sen = 1, spe = 0).
    """
    miss = 1.0 - test.sensitivity
    if miss == 0.0:
        return math.nan if test.specificity == 0.0 else math.inf
    return test.specificity / miss


def is_informative(test: DiagnosticTest) -> bool:
    # strict: at spe == 1 - sen repeated negatives carry no information
    return test.specificity > 1.0 - test.sensitivity


def false_count_grid(
    population: float,
    prevalences: Iterable[float],
    rates: Iterable[float],
    kind: str,
) -> list[tuple[float, float, float]]:
    """Expected false counts over a (prevalence, accuracy) grid.

    ``kind='fn'`` sweeps sensitivity and reports false negatives;
    ``kind='fp'`` sweeps specificity and reports false positives.
    Rows are ``(prevalence, rate, count)`` sorted by prevalence then rate.
    """
    if kind not in ("fn", "fp"):
        raise ValueError(f"kind must be 'fn' or 'fp', got {kind!r}")
    rows = []
    for prevalence in sorted(prevalences):
        state = CohortState.from_prevalence(population, prevalence)
        for rate in sorted(rates):
            if kind == "fn":
                count = expected_false_negatives(state, DiagnosticTest(rate, 1.0))
            else:
                count = expected_false_positives(state, DiagnosticTest(1.0, rate))
            rows.append((prevalence, rate, count))
    return rows
