import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dckit.analysis import (convention_report, decay_verdict, derivation_closure_sup,
                            divergence_verdict, inclusion_relation, is_log_convex,
                            is_normalized, is_weakly_log_convex, limit_conditions,
                            log_convex_consequences, moderate_growth_sup,
                            quasianalytic_verdict, ratio_root_sup, stabilization_verdict,
                            triangle_lhd)
from dckit.config import override_settings
from dckit.errors import InvalidParameter
from dckit.schemas import Status
from dckit.seq_core import (ConstantSequence, ExplicitSequence, GevreySequence,
                            QPowerSequence, parse_sequence_spec)

KS = np.arange(1, 65)


# Windowed tests


def test_stabilization_holds_for_converging_statistic():
    verdict = stabilization_verdict("bounded", KS, -1.0 / KS, 64)
    assert verdict.status == Status.holds
    assert verdict.params["stabilization_tol"] == 0.01


def test_stabilization_never_fails():
    verdict = stabilization_verdict("bounded", KS, KS * 1.0, 64)
    assert verdict.status == Status.inconclusive


def test_decay_holds_for_fast_decay():
    assert decay_verdict("decay", KS, -np.log(KS), 64).status == Status.holds


def test_decay_fails_without_decrease():
    verdict = decay_verdict("decay", KS, np.zeros(64), 64)
    assert verdict.status == Status.fails
    assert verdict.witness is not None


def test_decay_fails_on_positive_limit():
    verdict = decay_verdict("decay", KS, 1.0 + 1.0 / KS, 64)
    assert verdict.status == Status.fails
    assert verdict.statistic == pytest.approx(math.e, rel=1e-6)


def test_decay_threshold_is_configurable():
    # slow decay: r_64 / r_32 is about 0.84
    slow = -np.log(np.log(KS + 1.0))
    assert decay_verdict("decay", KS, slow, 64).status != Status.fails
    with override_settings(decay_ratio=0.99):
        assert decay_verdict("decay", KS, slow, 64).status == Status.holds


def test_divergence():
    assert divergence_verdict("grows", KS, np.log(KS), 64).status == Status.holds
    assert divergence_verdict("grows", KS, np.zeros(64), 64).status == Status.fails


def test_zero_terms_are_not_decay():
    # nonzero only at odd k, and equal to 1 there
    odd = np.where(KS % 2 == 1, 0.0, -np.inf)
    verdict = decay_verdict("decay", KS, odd, 64)
    assert verdict.status == Status.fails
    assert verdict.witness == 33
    growing = np.where(KS % 2 == 1, np.log(KS), -np.inf)
    assert decay_verdict("decay", KS, growing, 64).status == Status.fails
    assert divergence_verdict("grows", KS, growing, 64).status == Status.holds


def test_statistic_that_stops_is_vanishing():
    stops = np.where(KS <= 40, -np.log(KS), -np.inf)
    verdict = decay_verdict("decay", KS, stops, 64)
    assert verdict.status == Status.holds
    assert verdict.note == "statistic vanishes"
    assert divergence_verdict("grows", KS, stops, 64).status == Status.fails
    assert decay_verdict("decay", KS, np.full(64, -np.inf), 64).status == Status.holds


# Finite checks


def test_log_convexity():
    assert is_log_convex(GevreySequence(1.0), 32).status == Status.holds
    bumpy = ExplicitSequence.from_values([1.0, 4.0, 1.0, 8.0 / 3.0])
    verdict = is_log_convex(bumpy, 3)
    assert verdict.status == Status.fails
    assert verdict.witness == 1
    assert is_weakly_log_convex(bumpy, 3).status == Status.fails
    # k! M_k = k! is log-convex although M_k = 1 is flat
    assert is_weakly_log_convex(ConstantSequence(1.0), 32).status == Status.holds


def test_convexity_needs_three_points():
    with pytest.raises(InvalidParameter):
        is_log_convex(ConstantSequence(1.0), 1)


def test_normalized():
    assert is_normalized(ConstantSequence(1.0)).status == Status.holds
    assert is_normalized(ConstantSequence(2.0)).witness == 0
    assert is_normalized(ExplicitSequence.from_values([1.0, 0.5])).witness == 1


@given(st.lists(st.floats(-5.0, 5.0), min_size=2, max_size=30))
def test_log_convex_implies_weakly_log_convex(steps):
    logs = np.concatenate([[0.0], np.cumsum(sorted(steps))])
    M = ExplicitSequence.from_logs(logs.tolist())
    kmax = len(steps)
    assert is_log_convex(M, kmax).status == Status.holds
    assert is_weakly_log_convex(M, kmax).status == Status.holds


def test_log_convex_consequences():
    assert log_convex_consequences(GevreySequence(2.0), 24).status == Status.holds
    assert log_convex_consequences(ExplicitSequence.from_values([1.0, 4.0, 1.0, 2.0]), 3).status \
        == Status.fails


# Sup statistics


def test_derivation_closure():
    sup, verdict = derivation_closure_sup(GevreySequence(1.0), 64)
    assert sup == pytest.approx(2.0)
    assert verdict.status == Status.holds
    sup, _ = derivation_closure_sup(QPowerSequence(2.0), 64)
    assert sup == pytest.approx(8.0)


def test_sups_report_logs_when_they_overflow():
    sup, verdict = derivation_closure_sup(QPowerSequence(1e200), 8)
    assert sup is None
    assert verdict.statistic is None
    assert verdict.log_statistic == pytest.approx(3 * math.log(1e200))

    sup, verdict = moderate_growth_sup(QPowerSequence(1e10), 64)
    assert sup is None
    assert verdict.witness == (32, 32)
    assert verdict.log_statistic == pytest.approx(32 * math.log(1e10))


def test_moderate_growth():
    sup, verdict = moderate_growth_sup(ConstantSequence(1.0), 32)
    assert sup == pytest.approx(1.0)
    assert verdict.status == Status.holds

    sup, _ = moderate_growth_sup(GevreySequence(1.0), 64)
    assert 1.0 < sup < 2.0

    sup, verdict = moderate_growth_sup(QPowerSequence(2.0), 64)
    assert verdict.status == Status.inconclusive
    assert verdict.witness == (32, 32)
    assert sup == pytest.approx(2.0 ** 32)


@pytest.mark.parametrize("spec", ["const:1", "gevrey:s=0.5", "gevrey:s=1", "gevrey:s=2"])
def test_moderate_growth_bounds_derivation_closure(spec):
    M = parse_sequence_spec(spec)
    sigma, moderate = moderate_growth_sup(M, 64)
    closure, _ = derivation_closure_sup(M, 63)
    if spec.startswith("const"):
        assert moderate.status == Status.holds
    if moderate.status == Status.holds:
        assert closure <= sigma ** 2 * (1.0 + 1e-12)


def test_moderate_growth_ignores_worker_count():
    with override_settings(threads=4):
        parallel, _ = moderate_growth_sup(GevreySequence(1.5), 40)
    serial, _ = moderate_growth_sup(GevreySequence(1.5), 40)
    assert parallel == serial


def test_ratio_root_sup():
    assert ratio_root_sup(ConstantSequence(2.0), ConstantSequence(1.0), 8) == pytest.approx(2.0)
    assert ratio_root_sup(QPowerSequence(20.0), ConstantSequence(1.0), 256) is None


# Inclusions


def test_gevrey_inclusions():
    report = inclusion_relation(GevreySequence(1.0), GevreySequence(2.0), 64)
    assert report.beurling_inclusion.status == Status.holds
    assert report.roumieu_inclusion.status == Status.holds
    assert report.roumieu_into_beurling.status == Status.holds
    assert report.status == Status.holds
    assert report.ratio_root_sup == pytest.approx(1.0)

    reverse = inclusion_relation(GevreySequence(2.0), GevreySequence(1.0), 64)
    assert reverse.beurling_inclusion.status == Status.inconclusive
    assert reverse.roumieu_into_beurling.status == Status.fails
    assert reverse.status == Status.fails


def test_inclusion_of_fast_sequence_stays_in_log_domain():
    report = inclusion_relation(QPowerSequence(20.0), ConstantSequence(1.0), 256)
    assert report.ratio_root_sup is None
    assert report.log_ratio_root_sup == pytest.approx(256 * math.log(20.0))
    assert report.beurling_inclusion.status == Status.inconclusive
    assert report.beurling_inclusion.log_statistic == pytest.approx(256 * math.log(20.0))
    assert report.roumieu_into_beurling.status == Status.fails
    assert report.status == Status.fails


def test_same_class_is_not_strictly_smaller():
    report = inclusion_relation(ConstantSequence(1.0), ConstantSequence(1.0), 32)
    assert report.beurling_inclusion.status == Status.holds
    assert report.roumieu_into_beurling.status == Status.fails
    assert triangle_lhd(ConstantSequence(1.0), ConstantSequence(1.0), 32).status == Status.fails


def test_limit_conditions():
    ratio, root = limit_conditions(GevreySequence(1.0), 64)
    assert ratio.status == Status.holds
    assert root.status == Status.holds
    ratio, root = limit_conditions(ConstantSequence(1.0), 64)
    assert ratio.status == Status.fails
    assert root.status == Status.fails


# Quasianalyticity


@pytest.mark.parametrize("criterion", [2, 3, 4])
def test_analytic_class_is_quasianalytic(criterion):
    report = quasianalytic_verdict(ConstantSequence(1.0), criterion, 256)
    assert report.verdict.status == Status.holds
    assert report.tail_exponent <= 1.0
    assert report.partial_sums[-1][0] == (255 if criterion == 4 else 256)


@pytest.mark.parametrize("criterion", [2, 3, 4])
def test_gevrey_class_is_not_quasianalytic(criterion):
    report = quasianalytic_verdict(GevreySequence(1.0), criterion, 256)
    assert report.verdict.status == Status.fails
    assert report.tail_exponent >= 1.05


@pytest.mark.parametrize("spec", ["const:1", "gevrey:s=0.5", "gevrey:s=1", "gevrey:s=2", "qpow:q=2"])
def test_ratio_and_root_criteria_agree(spec):
    M = parse_sequence_spec(spec)
    by_roots = quasianalytic_verdict(M, 3, 256).verdict.status
    by_ratios = quasianalytic_verdict(M, 4, 256).verdict.status
    if Status.inconclusive not in (by_roots, by_ratios):
        assert by_roots == by_ratios


def test_tail_exponents_at_long_truncation():
    flat = quasianalytic_verdict(ConstantSequence(1.0), 2, 512)
    assert 0.9 <= flat.tail_exponent <= 1.0
    assert flat.verdict.status == Status.holds
    gevrey = quasianalytic_verdict(GevreySequence(1.0), 2, 512)
    assert 1.8 <= gevrey.tail_exponent <= 2.2


def test_quasianalytic_margin():
    with override_settings(qa_margin=10.0):
        report = quasianalytic_verdict(GevreySequence(1.0), 2, 256)
    assert report.verdict.status == Status.inconclusive
    assert report.verdict.params["qa_margin"] == 10.0


def test_quasianalytic_needs_long_truncation():
    with pytest.raises(InvalidParameter):
        quasianalytic_verdict(ConstantSequence(1.0), 2, 16)
    with pytest.raises(InvalidParameter):
        quasianalytic_verdict(ConstantSequence(1.0), 5, 64)


def test_convention_report():
    report = convention_report(parse_sequence_spec("gevrey:s=1"), 64)
    assert report.sequence == "gevrey:s=1.0"
    assert report.normalized.status == Status.holds
    assert report.log_convex.status == Status.holds
    assert report.weakly_log_convex.status == Status.holds
    assert report.derivation_closed.status == Status.holds
    assert [q.criterion for q in report.quasianalytic] == [2, 3, 4]
    assert report.shift_comparison is not None
    assert report.thresholds["decay_ratio"] == 0.6


def test_convention_report_on_short_data():
    M = ExplicitSequence.from_values([1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0, 40320.0])
    report = convention_report(M, 8)
    assert report.quasianalytic == []
    assert report.shift_comparison is None
