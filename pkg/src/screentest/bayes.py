"""Posterior infection probabilities under repeated, independent testing.

Two conditioning patterns are supported for a subject drawn from a cohort
with prevalence ``P`` and tested ``k`` times:

* first positive at test ``k`` (``k - 1`` negatives, then a positive)::

      1 / (1 + LR**(k-1) * ((1 - spe) / sen) * ((1 - P) / P))

* all ``k`` results negative (the chance a discharged patient is a carrier)::

      1 / (1 + LR**k * ((1 - P) / P))

where ``LR = spe / (1 - sen)``. Both are evaluated as a logistic function of
a log-odds sum so that large ``k`` neither overflows nor cancels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Literal, NamedTuple

from .testmodel import DiagnosticTest, is_informative, likelihood_ratio

__all__ = [
    "DEFAULT_TOLERANCE",
    "DEFAULT_CAP",
    "ZeroProbabilityError",
    "RepeatPlan",
    "DischargeRow",
    "CurvePoint",
    "posterior_first_positive_at",
    "posterior_all_negative",
    "min_negatives_to_discharge",
    "max_prevalence_for_k",
    "discharge_table",
    "posterior_curve",
]

DEFAULT_TOLERANCE = 0.05
DEFAULT_CAP = 100

Kind = Literal["first-positive", "all-negative"]
KINDS = ("first-positive", "all-negative")


class ZeroProbabilityError(ValueError):
    """The observed result pattern cannot occur under the given test and prior."""

    def __init__(self, detail: str = ""):
        msg = "conditioning event has probability zero"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass(frozen=True)
class RepeatPlan:
    test: DiagnosticTest
    prevalence: float
    repetitions: int
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if not (0.0 <= self.prevalence <= 1.0):
            raise ValueError(f"prevalence must be in [0, 1], got {self.prevalence!r}")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError(f"repetitions must be an integer >= 1, got {self.repetitions!r}")
        if not (0.0 < self.tolerance < 1.0):
            raise ValueError(f"tolerance must be in (0, 1), got {self.tolerance!r}")
        object.__setattr__(self, "repetitions", int(self.repetitions))


@dataclass(frozen=True)
class DischargeRow:
    """Discharge requirement at one prevalence.

    ``required_negatives`` is None when no k up to the cap meets the
    tolerance; ``achieved_miss_probability`` is then the best value seen.
    """

    prevalence: float
    required_negatives: int | None
    achieved_miss_probability: float
    tolerance: float = DEFAULT_TOLERANCE

    @property
    def reachable(self) -> bool:
        return self.required_negatives is not None


class CurvePoint(NamedTuple):
    k: int
    prevalence: float
    probability: float


def _logistic_of_neg(x: float) -> float:
    """1 / (1 + exp(x)) without overflow."""
    if x > 0.0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def _log_odds_against(test: DiagnosticTest, prevalence: float, negatives: int, positives: int) -> float:
    """log P(pattern, healthy) - log P(pattern, infected) for an ordered result pattern.

    Impossible branches short-circuit to +/-inf before any log is taken.
    """
    sen, spe = test.sensitivity, test.specificity
    infected_possible = (
        prevalence > 0.0 and (negatives == 0 or sen < 1.0) and (positives == 0 or sen > 0.0)
    )
    healthy_possible = (
        prevalence < 1.0 and (negatives == 0 or spe > 0.0) and (positives == 0 or spe < 1.0)
    )
    if not (infected_possible or healthy_possible):
        raise ZeroProbabilityError(
            f"{negatives} negative(s) then {positives} positive(s) under "
            f"sen={sen}, spe={spe}, prevalence={prevalence}"
        )
    if not infected_possible:
        return math.inf
    if not healthy_possible:
        return -math.inf
    x = math.log(1.0 - prevalence) - math.log(prevalence)
    if negatives:
        x += negatives * (math.log(spe) - math.log(1.0 - sen))
    if positives:
        x += positives * (math.log(1.0 - spe) - math.log(sen))
    return x


def _posterior(test: DiagnosticTest, prevalence: float, negatives: int, positives: int) -> float:
    x = _log_odds_against(test, prevalence, negatives, positives)
    if x == math.inf:
        return 0.0
    if x == -math.inf:
        return 1.0
    return _logistic_of_neg(x)


def posterior_first_positive_at(plan: RepeatPlan) -> float:
    """P(infected | first k-1 results negative, k-th positive)."""
    if plan.prevalence == 0.0:
        return 0.0
    if plan.prevalence == 1.0:
        return 1.0
    return _posterior(plan.test, plan.prevalence, plan.repetitions - 1, 1)


def posterior_all_negative(plan: RepeatPlan) -> float:
    """P(infected | all k results negative): the miss probability at discharge."""
    if plan.prevalence == 0.0:
        return 0.0
    return _posterior(plan.test, plan.prevalence, plan.repetitions, 0)


def _miss(test: DiagnosticTest, prevalence: float, k: int) -> float:
    return posterior_all_negative(RepeatPlan(test, prevalence, k))


def min_negatives_to_discharge(
    test: DiagnosticTest,
    prevalence: float,
    tolerance: float = DEFAULT_TOLERANCE,
    cap: int = DEFAULT_CAP,
) -> int | None:
    """Smallest k with miss probability <= tolerance, or None if unreachable.

    A closed-form guess is checked and, if needed, nudged by direct
    evaluation so that k meets the tolerance and k-1 does not.
    """
    if not (0.0 < tolerance < 1.0):
        raise ValueError(f"tolerance must be in (0, 1), got {tolerance!r}")
    if not (0.0 <= prevalence <= 1.0):
        raise ValueError(f"prevalence must be in [0, 1], got {prevalence!r}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap!r}")
    if prevalence == 1.0:
        raise ValueError("unreachable at any k: every subject is infected (prevalence = 1)")

    if _miss(test, prevalence, 1) <= tolerance:
        return 1
    if not is_informative(test):
        # miss probability is nondecreasing in k, so k=1 was the best chance
        return None

    ratio = likelihood_ratio(test)
    if math.isinf(ratio):
        return 1
    target = math.log((1.0 - tolerance) / tolerance) + math.log(prevalence) - math.log1p(-prevalence)
    k = max(1, math.ceil(target / math.log(ratio)))
    if k > cap + 1:
        return None

    k = min(k, cap)
    while k > 1 and _miss(test, prevalence, k - 1) <= tolerance:
        k -= 1
    while _miss(test, prevalence, k) > tolerance:
        if k >= cap:
            return None
        k += 1
    return k


def max_prevalence_for_k(test: DiagnosticTest, k: int, tolerance: float = DEFAULT_TOLERANCE) -> float:
    """Largest prevalence at which k negatives keep the miss probability <= tolerance."""
    if not is_informative(test):
        raise ValueError(f"test {test.label!r} is not informative (spe <= 1 - sen)")
    if int(k) != k or k < 1:
        raise ValueError(f"k must be an integer >= 1, got {k!r}")
    if not (0.0 < tolerance < 1.0):
        raise ValueError(f"tolerance must be in (0, 1), got {tolerance!r}")
    ratio = likelihood_ratio(test)
    if math.isinf(ratio):
        return 1.0
    log_r = k * math.log(ratio) + math.log(tolerance) - math.log1p(-tolerance)
    # R / (1 + R) == 1 / (1 + exp(-log R))
    return _logistic_of_neg(-log_r)


def discharge_table(
    test: DiagnosticTest,
    prevalences: Iterable[float],
    tolerance: float = DEFAULT_TOLERANCE,
    cap: int = DEFAULT_CAP,
) -> list[DischargeRow]:
    prevalences = list(prevalences)
    if not prevalences:
        raise ValueError("at least one prevalence is required")
    rows = []
    for p in prevalences:
        if not (0.0 <= p < 1.0):
            raise ValueError(f"prevalence must be in [0, 1), got {p!r}")
        k = min_negatives_to_discharge(test, p, tolerance, cap)
        if k is None:
            achieved = min(_miss(test, p, 1), _miss(test, p, cap))
        else:
            achieved = _miss(test, p, k)
        rows.append(DischargeRow(p, k, achieved, tolerance))
    return rows


def posterior_curve(
    test: DiagnosticTest,
    prevalence_grid: Iterable[float],
    k_values: Iterable[int],
    kind: Kind = "all-negative",
) -> list[CurvePoint]:
    """Evaluate one posterior over a (k, prevalence) grid, ordered by k then prevalence."""
    if kind == "first-positive":
        fn = posterior_first_positive_at
    elif kind == "all-negative":
        fn = posterior_all_negative
    else:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    grid = sorted(prevalence_grid)
    return [
        CurvePoint(k, p, fn(RepeatPlan(test, p, k)))
        for k in sorted(set(k_values))
        for p in grid
    ]
