"""Seeded Monte Carlo estimates of screening counts and repeated-test posteriors.

Every individual (or trial) is simulated from scratch: a true status is drawn
with P(infected) = prevalence, then each test outcome is drawn from the
test's sensitivity or false-positive rate. Nothing here calls into the
closed-form posterior code, so agreement between the two is a real check.

Random stream
-------------
Generator: NumPy ``Philox`` (Philox4x64-10, counter-based) seeded with the
64-bit seed, wrapped in ``numpy.random.Generator``; uniforms come from
``Generator.random`` (53-bit doubles). A trial with ``k`` tests consumes
``k + 1`` consecutive uniforms: status first, then tests in order. Trials are
consumed in order, so the result does not depend on ``CHUNK_TRIALS``.
An event with probability ``p`` occurs when ``u < p``.

Only the sequential single-seed run is provided; it is the canonical result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .testmodel import DiagnosticTest

__all__ = [
    "RNG_ALGORITHM",
    "MIN_CONDITIONING_HITS",
    "TrialConfig",
    "ScreenTally",
    "PosteriorEstimate",
    "make_rng",
    "simulate_cohort_screen",
    "estimate_posterior_first_positive",
    "estimate_posterior_all_negative",
]

RNG_ALGORITHM = "numpy.random.Philox (Philox4x64-10) + Generator.random, stream v1"
MIN_CONDITIONING_HITS = 100
CHUNK_TRIALS = 1 << 18
_MAX_SEED = 1 << 64


def make_rng(seed: int) -> np.random.Generator:
    if int(seed) != seed or not (0 <= seed < _MAX_SEED):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class TrialConfig:
    test: DiagnosticTest
    prevalence: float
    repetitions: int
    trials: int
    seed: int

    def __post_init__(self):
        if not (0.0 <= self.prevalence <= 1.0):
            raise ValueError(f"prevalence must be in [0, 1], got {self.prevalence!r}")
        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise ValueError(f"repetitions must be an integer >= 1, got {self.repetitions!r}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be an integer >= 1, got {self.trials!r}")
        make_rng(self.seed)


@dataclass(frozen=True)
class ScreenTally:
    true_positives: int
    false_positives: int
    true_negatives: int
    false_negatives: int

    @property
    def population(self) -> int:
        return self.true_positives + self.false_positives + self.true_negatives + self.false_negatives

    @property
    def infected(self) -> int:
        return self.true_positives + self.false_negatives

    @property
    def healthy(self) -> int:
        return self.false_positives + self.true_negatives


@dataclass(frozen=True)
class PosteriorEstimate:
    """Fraction infected among trials that matched the conditioning pattern.

    ``estimate`` is None when no trial matched; ``warning`` is set when fewer
    than ``MIN_CONDITIONING_HITS`` matched and the standard error is unreliable.
    """

    estimate: float | None
    standard_error: float | None
    conditioning_hits: int
    infected_hits: int
    trials: int
    seed: int
    warning: str | None = None

    @property
    def has_hits(self) -> bool:
        return self.conditioning_hits > 0


def _chunks(total: int):
    done = 0
    while done < total:
        n = min(CHUNK_TRIALS, total - done)
        yield n
        done += n


def simulate_cohort_screen(
    population: int, prevalence: float, test: DiagnosticTest, seed: int
) -> ScreenTally:
    """Test every member of a simulated population once and tally the outcomes."""
    if int(population) != population or population < 1:
        raise ValueError(f"population must be an integer >= 1, got {population!r}")
    if not (0.0 <= prevalence <= 1.0):
        raise ValueError(f"prevalence must be in [0, 1], got {prevalence!r}")
    rng = make_rng(seed)
    tp = fp = tn = fn = 0
    for n in _chunks(int(population)):
        u = rng.random((n, 2))
        infected = u[:, 0] < prevalence
        positive = np.where(infected, u[:, 1] < test.sensitivity, u[:, 1] < 1.0 - test.specificity)
        tp += int(np.count_nonzero(infected & positive))
        fn += int(np.count_nonzero(infected & ~positive))
        fp += int(np.count_nonzero(~infected & positive))
        tn += int(np.count_nonzero(~infected & ~positive))
    return ScreenTally(tp, fp, tn, fn)


def _estimate(config: TrialConfig, first_positive: bool) -> PosteriorEstimate:
    k = config.repetitions
    sen, fpr = config.test.sensitivity, 1.0 - config.test.specificity
    rng = make_rng(config.seed)
    hits = infected_hits = 0
    for n in _chunks(config.trials):
        u = rng.random((n, k + 1))
        infected = u[:, 0] < config.prevalence
        p_positive = np.where(infected, sen, fpr)[:, None]
        positive = u[:, 1:] < p_positive
        if first_positive:
            match = ~positive[:, : k - 1].any(axis=1) & positive[:, k - 1]
        else:
            match = ~positive.any(axis=1)
        hits += int(np.count_nonzero(match))
        infected_hits += int(np.count_nonzero(match & infected))

    if hits == 0:
        return PosteriorEstimate(
            None, None, 0, 0, config.trials, config.seed,
            warning="no conditioning hits: pattern impossible or too rare for this trial count",
        )
    p = infected_hits / hits
    warning = None
    if hits < MIN_CONDITIONING_HITS:
        warning = f"only {hits} conditioning hits (< {MIN_CONDITIONING_HITS}); standard error unreliable"
    return PosteriorEstimate(
        p, math.sqrt(p * (1.0 - p) / hits), hits, infected_hits, config.trials, config.seed, warning
    )


def estimate_posterior_first_positive(config: TrialConfig) -> PosteriorEstimate:
    """Empirical P(infected | k-1 negatives then a positive)."""
    return _estimate(config, first_positive=True)


def estimate_posterior_all_negative(config: TrialConfig) -> PosteriorEstimate:
    """Empirical P(infected | k negatives)."""
    return _estimate(config, first_positive=False)
