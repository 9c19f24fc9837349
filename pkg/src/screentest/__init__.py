"""Consequences of imperfect diagnostic testing: false counts, repeated-test posteriors, discharge rules."""

from .bayes import (
    DischargeRow,
    RepeatPlan,
    ZeroProbabilityError,
    discharge_table,
    max_prevalence_for_k,
    min_negatives_to_discharge,
    posterior_all_negative,
    posterior_curve,
    posterior_first_positive_at,
)
from .cohort import (
    CohortSeries,
    DailyRecord,
    PolicyEvaluation,
    builtin_diamond_princess,
    emit_report,
    evaluate_testing_policy,
    evolve,
    load_series,
)
from .simulate import (
    PosteriorEstimate,
    ScreenTally,
    TrialConfig,
    estimate_posterior_all_negative,
    estimate_posterior_first_positive,
    simulate_cohort_screen,
)
from .testmodel import (
    BIOMEDOMICS,
    HUTCHISON,
    CohortState,
    DiagnosticTest,
    expected_false_negatives,
    expected_false_positives,
    get_preset,
    is_informative,
    likelihood_ratio,
)

__version__ = "0.1.0"
