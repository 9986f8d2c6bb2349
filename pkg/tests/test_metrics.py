"""Confusion arithmetic, risk/cost metric formulas, and rank-based AUC
against an all-pairs brute-force oracle."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsemap import metrics as m


def brute_force_auc(scores, truth):
    """Oracle: count positive-negative pairs ordered correctly, ties as 1/2."""
    scores = list(scores)
    pos = [s for s, t in zip(scores, truth) if t]
    neg = [s for s, t in zip(scores, truth) if not t]
    if not pos or not neg:
        return None
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


counts_strategy = st.tuples(*[st.integers(0, 40)] * 6)


def make_counts(t):
    return m.ConfusionCounts(tp=t[0], up=t[1], fn=t[2], fp=t[3], un=t[4], tn=t[5])


class TestConfusion:
    def test_perfect_partition(self):
        labels = np.array([1, 1, -1, -1])
        truth = np.array([True, True, False, False])
        c = m.confusion(labels, truth)
        assert (c.tp, c.fn, c.fp, c.tn, c.up, c.un) == (2, 0, 0, 2, 0, 0)

    def test_all_undetermined(self):
        labels = np.zeros(7, dtype=int)
        truth = np.array([True] * 3 + [False] * 4)
        c = m.confusion(labels, truth)
        assert (c.tp, c.fn, c.fp, c.tn) == (0, 0, 0, 0)
        assert (c.up, c.un) == (3, 4)
        assert c.total == 7

    def test_hand_counted_ten_points(self):
        #        idx: 0  1  2  3  4  5  6  7  8  9
        labels = [1, 1, 1, -1, -1, 0, 0, 0, -1, 1]
        truth = [True, True, False, True, False, True, False, False, False, False]
        c = m.confusion(np.array(labels), np.array(truth))
        assert c == m.ConfusionCounts(tp=2, up=1, fn=1, fp=2, un=2, tn=2)

    def test_cell_sum_is_n(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 80))
            labels = rng.choice([-1, 0, 1], size=n)
            truth = rng.random(n) < 0.5
            assert m.confusion(labels, truth).total == n

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            m.confusion(np.zeros(3, dtype=int), np.zeros(4, dtype=bool))


class TestRiskCostFormulas:
    def test_printed_example(self):
        c = m.ConfusionCounts(tp=50, up=10, fn=5, fp=3, un=7, tn=25)
        sens_r, spec_r, f1_r = m.risk_sensitive(c)
        assert sens_r == pytest.approx(50 / 65)
        assert spec_r == pytest.approx(32 / 35)
        assert f1_r == pytest.approx(100 / (100 + 3 + 15))
        sens_c, spec_c, f1_c = m.cost_sensitive(c)
        assert sens_c == pytest.approx(60 / 65)
        assert spec_c == pytest.approx(25 / 35)
        assert f1_c == pytest.approx(120 / (120 + 10 + 5))

    def test_no_undetermined_collapses_to_standard(self):
        c = m.ConfusionCounts(tp=12, up=0, fn=4, fp=3, un=0, tn=9)
        assert m.risk_sensitive(c) == m.cost_sensitive(c)
        sens, spec, _ = m.risk_sensitive(c)
        assert sens == pytest.approx(12 / 16)
        assert spec == pytest.approx(9 / 12)

    def test_undefined_on_zero_denominator(self):
        # Empty positive class: sensitivity has denominator 0; the F1
        # denominator is still 2 (from FP), so F1 is a defined 0.
        c = m.ConfusionCounts(tp=0, up=0, fn=0, fp=2, un=1, tn=5)
        sens, spec, f1 = m.risk_sensitive(c)
        assert sens is None
        assert spec == pytest.approx(6 / 8)
        assert f1 == 0.0

    def test_everything_undefined_on_empty_table(self):
        c = m.ConfusionCounts(0, 0, 0, 0, 0, 0)
        assert m.risk_sensitive(c) == (None, None, None)
        assert m.cost_sensitive(c) == (None, None, None)

    def test_all_undetermined_all_positive(self):
        c = m.ConfusionCounts(tp=0, up=9, fn=0, fp=0, un=0, tn=0)
        sens_c, spec_c, _ = m.cost_sensitive(c)
        assert sens_c == 1.0
        assert spec_c is None

    def test_exact_rational_on_enumerated_tables(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            t = tuple(int(x) for x in rng.integers(0, 30, size=6))
            c = make_counts(t)
            sens_r, spec_r, f1_r = m.risk_sensitive(c)
            if c.tp + c.up + c.fn:
                assert Fraction(sens_r).limit_denominator(10**9) == Fraction(
                    c.tp, c.tp + c.up + c.fn)
            if c.tn + c.fp + c.un:
                assert Fraction(spec_r).limit_denominator(10**9) == Fraction(
                    c.tn + c.un, c.tn + c.fp + c.un)
            sens_c, spec_c, f1_c = m.cost_sensitive(c)
            if c.tp + c.up + c.fn:
                assert Fraction(sens_c).limit_denominator(10**9) == Fraction(
                    c.tp + c.up, c.tp + c.up + c.fn)
            if c.tn + c.fp + c.un:
                assert Fraction(spec_c).limit_denominator(10**9) == Fraction(
                    c.tn, c.tn + c.fp + c.un)
            if 2 * c.tp + c.fp + c.up + c.fn:
                assert Fraction(f1_r).limit_denominator(10**9) == Fraction(
                    2 * c.tp, 2 * c.tp + c.fp + c.up + c.fn)
            if 2 * (c.tp + c.up) + c.fp + c.un + c.fn:
                assert Fraction(f1_c).limit_denominator(10**9) == Fraction(
                    2 * (c.tp + c.up), 2 * (c.tp + c.up) + c.fp + c.un + c.fn)

    @given(counts_strategy)
    @settings(max_examples=500, deadline=None)
    def test_ordering_properties(self, t):
        c = make_counts(t)
        sens_r, spec_r, _ = m.risk_sensitive(c)
        sens_c, spec_c, _ = m.cost_sensitive(c)
        if sens_r is not None and sens_c is not None:
            assert sens_r <= sens_c + 1e-15
        if spec_r is not None and spec_c is not None:
            assert spec_c <= spec_r + 1e-15


class TestAuc:
    def test_perfectly_ordered(self):
        scores = [0.1, 0.4, 0.9, 0.95]
        truth = [False, False, True, True]
        assert m.mann_whitney_auc(scores, truth) == 1.0

    def test_anti_ordered(self):
        scores = [0.9, 0.8, 0.1, 0.2]
        truth = [False, False, True, True]
        assert m.mann_whitney_auc(scores, truth) == 0.0

    def test_six_point_tie_case(self):
        scores = [1.0, 2.0, 2.0, 3.0, 0.5, 2.0]
        truth = [False, True, False, True, False, True]
        assert m.mann_whitney_auc(scores, truth) == pytest.approx(
            brute_force_auc(scores, truth))

    def test_single_class_undefined(self):
        assert m.mann_whitney_auc([1, 2, 3], [True, True, True]) is None
        assert m.mann_whitney_auc([1, 2, 3], [False, False, False]) is None

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(8)
        for _ in range(60):
            n = int(rng.integers(2, 50))
            scores = rng.choice([0.0, 0.25, 0.5, 1.0, 2.0], size=n)
            truth = rng.random(n) < 0.5
            expected = brute_force_auc(scores, truth)
            got = m.mann_whitney_auc(scores, truth)
            if expected is None:
                assert got is None
            else:
                assert got == pytest.approx(expected, abs=1e-12)

    def test_undetermined_assignment_modes(self):
        scores = np.array([5.0, 1.0, 3.0, 2.5])
        truth = np.array([True, False, True, False])
        undet = np.array([False, False, True, False])
        risk = m.auc(scores, truth, "risk", undetermined=undet)
        cost = m.auc(scores, truth, "cost", undetermined=undet)
        assert risk == pytest.approx(
            brute_force_auc([5.0, 1.0, -np.inf, 2.5], truth))
        assert cost == pytest.approx(
            brute_force_auc([5.0, 1.0, np.inf, 2.5], truth))
        assert risk <= cost

    def test_mode_validated(self):
        with pytest.raises(ValueError):
            m.auc([1.0], [True], "both")


class TestCsv:
    def test_nulls_are_empty_fields(self, tmp_path):
        rows = [m.MetricRow(0, 0, None, None, None, None, None, None, None, None),
                m.MetricRow(1, 1, 0.5, 1.0, 0.25, None, 0.75, 0.5, 0.5, 0.125)]
        path = tmp_path / "curve.csv"
        m.write_metrics_csv(rows, path)
        lines = path.read_text().splitlines()
        assert lines[0] == m.METRIC_CSV_HEADER
        assert lines[1] == "0,0,,,,,,,,"
        assert lines[2].startswith("1,1,0.5,1.0,0.25,,0.75,0.5,0.5,0.125")
