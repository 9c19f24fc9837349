import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from screentest.testmodel import (
    BIOMEDOMICS,
    HUTCHISON,
    CohortState,
    DiagnosticTest,
    expected_false_negatives,
    expected_false_positives,
    false_count_grid,
    get_preset,
    is_informative,
    likelihood_ratio,
)

probs = st.floats(0.0, 1.0, allow_nan=False)
counts = st.floats(0.0, 1e7, allow_nan=False)


@st.composite
def states(draw):
    total = draw(st.floats(1e-3, 1e7, allow_nan=False))
    infected = draw(st.floats(0.0, 1.0)) * total
    return CohortState(0, total, infected)


@st.composite
def diagnostic_tests(draw):
    return DiagnosticTest(draw(probs), draw(probs))


class TestDiagnosticTest:
    @pytest.mark.parametrize("sen,spe", [(-0.01, 0.5), (0.5, 1.01), (math.nan, 0.5)])
    def test_rejects_out_of_range(self, sen, spe):
        with pytest.raises(ValueError):
            DiagnosticTest(sen, spe)

    @given(probs, probs)
    def test_error_rates_are_complements(self, sen, spe):
        t = DiagnosticTest(sen, spe)
        assert t.false_negative_rate == 1.0 - t.sensitivity
        assert t.false_positive_rate == 1.0 - t.specificity

    def test_presets(self):
        assert (HUTCHISON.sensitivity, HUTCHISON.specificity) == (0.60, 0.90)
        assert (BIOMEDOMICS.sensitivity, BIOMEDOMICS.specificity) == (0.8866, 0.9063)
        assert get_preset("Hutchison") is HUTCHISON
        assert get_preset("biomedomics") is BIOMEDOMICS
        with pytest.raises(ValueError, match="unknown test preset"):
            get_preset("pcr")

    def test_immutable(self):
        with pytest.raises(AttributeError):
            HUTCHISON.sensitivity = 0.7


class TestCohortState:
    def test_derived_healthy_and_prevalence(self):
        s = CohortState(17, 3701, 10)
        assert s.healthy == 3691
        assert s.prevalence == pytest.approx(10 / 3701, rel=1e-15)

    def test_day_zero_disease_free(self):
        s = CohortState(0, 3711, 0)
        assert s.prevalence == 0.0

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(day=-1, total=10, infected=1),
            dict(day=0, total=10, infected=11),
            dict(day=0, total=-1, infected=0),
            dict(day=0, total=10, infected=2, healthy=7),
        ],
    )
    def test_rejects_inconsistent(self, kwargs):
        with pytest.raises(ValueError):
            CohortState(**kwargs)

    def test_empty_population_prevalence_undefined(self):
        with pytest.raises(ValueError):
            CohortState(0, 0, 0).prevalence


class TestFalseCounts:
    def test_waterloo_false_positives(self):
        s = CohortState(0, 601_220, 8)
        assert expected_false_positives(s, HUTCHISON) == pytest.approx(60_121.2, rel=1e-12)

    def test_waterloo_false_negatives(self):
        s = CohortState(0, 601_220, 8)
        assert expected_false_negatives(s, HUTCHISON) == pytest.approx(3.2, rel=1e-12)

    def test_perfect_specificity_gives_no_false_positives(self):
        assert expected_false_positives(CohortState(0, 100, 3), DiagnosticTest(0.5, 1.0)) == 0.0

    def test_disease_free_gives_no_false_negatives(self):
        assert expected_false_negatives(CohortState(0, 100, 0), HUTCHISON) == 0.0

    def test_diamond_princess_day_17(self):
        s = CohortState(17, 3711 - 10, 10)
        assert expected_false_positives(s, HUTCHISON) == pytest.approx(369.1, rel=1e-12)
        assert expected_false_negatives(s, HUTCHISON) == pytest.approx(4.0, rel=1e-12)

    def test_single_carrier_in_eighteen(self):
        s = CohortState(0, 18, 1)
        assert expected_false_negatives(s, HUTCHISON) == pytest.approx(0.4, rel=1e-12)

    def test_rejects_empty_population(self):
        with pytest.raises(ValueError, match="empty"):
            expected_false_positives(CohortState(3, 0, 0), HUTCHISON)
        with pytest.raises(ValueError):
            expected_false_negatives(CohortState(3, 0, 0), HUTCHISON)

    @given(states(), diagnostic_tests())
    def test_partitions(self, s, t):
        fp = expected_false_positives(s, t)
        fn = expected_false_negatives(s, t)
        assert fp + s.healthy * t.specificity == pytest.approx(s.healthy, rel=1e-12, abs=1e-9)
        assert fn + s.infected * t.sensitivity == pytest.approx(s.infected, rel=1e-12, abs=1e-9)
        assert fp >= 0 and fn >= 0

    @given(states(), probs, probs, probs)
    def test_monotone_in_accuracy(self, s, a, b, other):
        lo, hi = sorted((a, b))
        assert expected_false_positives(s, DiagnosticTest(other, hi)) <= expected_false_positives(
            s, DiagnosticTest(other, lo)
        )
        assert expected_false_negatives(s, DiagnosticTest(hi, other)) <= expected_false_negatives(
            s, DiagnosticTest(lo, other)
        )

    @given(st.floats(1.0, 1e7), st.floats(0.0, 1.0), diagnostic_tests())
    def test_patient_zero_never_missed_in_expectation(self, total, infected, t):
        s = CohortState(1, total, infected)
        fn = expected_false_negatives(s, t)
        assert fn <= infected
        if infected < 1.0 or t.false_negative_rate < 1.0:
            assert fn < 1.0

    def test_grid_shapes_and_trend(self):
        rows = false_count_grid(10_000, [0.5, 1e-4], [0.2, 0.9, 0.5], "fn")
        assert [r[0] for r in rows] == [1e-4] * 3 + [0.5] * 3
        assert [r[1] for r in rows[:3]] == [0.2, 0.5, 0.9]
        assert all(r[2] < 1 for r in rows[:3])
        assert rows[3][2] > rows[4][2] > rows[5][2]
        fp_rows = false_count_grid(10_000, [0.01], [0.4, 0.95], "fp")
        assert fp_rows[0][2] == pytest.approx(9900 * 0.6)
        with pytest.raises(ValueError):
            false_count_grid(10, [0.1], [0.5], "tp")


class TestLikelihoodRatio:
    @pytest.mark.parametrize(
        "sen,spe,expected",
        [(0.60, 0.90, 2.25), (0.50, 0.50, 1.0), (0.8866, 0.9063, 0.9063 / 0.1134)],
    )
    def test_values(self, sen, spe, expected):
        assert likelihood_ratio(DiagnosticTest(sen, spe)) == pytest.approx(expected, rel=1e-12)

    def test_biomedomics_value(self):
        assert likelihood_ratio(BIOMEDOMICS) == pytest.approx(7.992063492063492, rel=1e-12)

    def test_markers(self):
        assert likelihood_ratio(DiagnosticTest(1.0, 0.3)) == math.inf
        assert math.isnan(likelihood_ratio(DiagnosticTest(1.0, 0.0)))

    @pytest.mark.parametrize(
        "sen,spe,expected",
        [(0.60, 0.90, True), (0.50, 0.50, False), (0.30, 0.30, False), (1.0, 0.0, False), (1.0, 0.01, True)],
    )
    def test_is_informative(self, sen, spe, expected):
        assert is_informative(DiagnosticTest(sen, spe)) is expected

    @given(diagnostic_tests())
    def test_informative_iff_ratio_above_one(self, t):
        ratio = likelihood_ratio(t)
        if math.isnan(ratio):
            return
        # a division may round a ratio a hair above 1 down to exactly 1.0
        assert is_informative(t) == (ratio > 1.0) or ratio == 1.0
