import math

import numpy as np
import pytest

from dckit.config import override_settings
from dckit.errors import (DomainError, InvalidParameter, OrderInsufficient, OrderTooLarge,
                          ParseError, PreconditionFailed)
from dckit.expr import parse_expr
from dckit.jetnorms import (Grid, counterexample_54, evaluation_divergence, explaw_verify,
                            finite_difference_check, general_weight_norm, mixed_partials,
                            polarization_bracket, sample_jet, seminorm_K_rho,
                            seminorm_from_samples, taylor_jet, verify_taylor_remainder_bound,
                            whitney_remainder_seminorm, whitney_report)
from dckit.jets import TestSequence
from dckit.schemas import Status
from dckit.seq_core import ConstantSequence, GevreySequence

ONE = ConstantSequence(1.0)
UNIT = Grid(0.0, 1.0, 64)
# multiples of 1/8: every remainder of a small integer polynomial is exact
DYADIC = Grid(0.0, 1.0, 9)
POLY6 = "1 + x + 2*x^2 + x^3 + 3*x^4 + x^5 + 2*x^6"


def test_grid():
    assert Grid.parse("0, 1, 5").points().tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert Grid(0.0, 2.0, 3).render() == "0.0,2.0,3"
    with pytest.raises(ParseError):
        Grid.parse("0,1")
    with pytest.raises(ParseError):
        Grid.parse("0,1,many")
    with pytest.raises(InvalidParameter):
        Grid(1.0, 0.0, 5)
    with pytest.raises(InvalidParameter):
        Grid(0.0, 1.0, 1000)
    with override_settings(max_grid=1000):
        assert Grid(0.0, 1.0, 1000).n == 1000


# Derivatives


def test_taylor_jet():
    assert taylor_jet(parse_expr("exp(x)"), 0.5, 1.0, 6) == pytest.approx([math.exp(0.5)] * 7)
    assert taylor_jet(parse_expr("exp(x+y)"), [0.0, 0.0], [1.0, 1.0], 4) == pytest.approx(
        [1.0, 2.0, 4.0, 8.0, 16.0])
    with pytest.raises(InvalidParameter):
        taylor_jet(parse_expr("x+y"), 0.0, 1.0, 3)
    with pytest.raises(OrderTooLarge):
        taylor_jet(parse_expr("x"), 0.0, 1.0, 31)


def test_mixed_partials():
    P = mixed_partials(parse_expr("sin(x)*cos(y)"), (0.0, 0.0), 4)
    assert P[1, 0] == pytest.approx(1.0)
    assert P[1, 2] == pytest.approx(-1.0)
    assert P[0, 0] == 0.0


def test_finite_differences_agree():
    assert finite_difference_check(parse_expr("exp(x)*sin(x)"), 0.3, 1.0, 6) < 1e-6
    assert finite_difference_check(parse_expr("x^2*y"), [0.5, 0.5], [0.6, 0.8], 4) < 1e-6


@pytest.mark.parametrize("text", [
    "exp(x)", "sin(x)", "cos(x)", "log(1+x)", "exp(x)*sin(x)", "1/(1+x^2)",
    "x*exp(0.3)", "0.7*exp(x)", POLY6, "1 - 2*x + 3*x^2 - x^3 + 0.5*x^4 - 0.25*x^5 + x^6",
])
def test_derivatives_match_finite_differences_in_one_variable(text):
    for x in (0.1, 0.5, 0.9):
        assert finite_difference_check(parse_expr(text), x, 1.0, 6) <= 1e-5


@pytest.mark.parametrize("text", ["x*exp(y)", "exp(x+y)", "sin(x)*cos(y)", "x^2*y + y^3"])
def test_derivatives_match_finite_differences_in_two_variables(text):
    for v in ([1.0, 0.0], [0.0, 1.0], [0.6, 0.8]):
        assert finite_difference_check(parse_expr(text), [0.5, 0.25], v, 6) <= 1e-5


def test_sampling_errors():
    with pytest.raises(DomainError):
        sample_jet(parse_expr("log(x)"), [Grid(0.0, 1.0, 5)], 3)
    with pytest.raises(InvalidParameter):
        sample_jet(parse_expr("x"), [UNIT, UNIT, UNIT], 3)


# Seminorms


def test_seminorm_of_exp():
    report = seminorm_K_rho(parse_expr("exp(x)"), [UNIT], ONE, 1.0, 10)
    assert report.lower == pytest.approx(math.e)
    assert report.upper == report.lower
    assert report.argmax_order == 0
    assert report.argmax_point == [1.0]
    assert report.rows[3].lower == pytest.approx(math.e / 6)


def test_seminorm_scales_with_rho():
    sj = sample_jet(parse_expr("exp(3*x)"), [UNIT], 8)
    rows = seminorm_from_samples(sj, ONE, 3.0).rows
    assert [r.lower for r in rows] == pytest.approx([math.exp(3.0) / math.factorial(n) for n in range(9)])


def test_seminorm_in_two_variables():
    report = seminorm_K_rho(parse_expr("exp(x+y)"), [DYADIC, DYADIC], ONE, 1.0, 4)
    assert report.dimension == 2
    row = report.rows[2]
    # sup over unit v of |(v1 + v2)^2| e^2 is attained at v = (1, 1)/sqrt 2
    assert row.lower == pytest.approx(math.exp(2.0), rel=1e-12)
    # the Frobenius norm sqrt(1 + 2 + 1) e^2 / 2! closes the bracket
    assert row.upper == pytest.approx(row.lower, rel=1e-12)
    assert all(r.upper >= r.lower for r in report.rows)
    assert report.argmax_point == [1.0, 1.0]
    assert report.grid == ["0.0,1.0,9", "0.0,1.0,9"]
    assert report.params["directions"] == 16


def test_two_variable_upper_bound_is_guaranteed():
    # d_v^3 of 3x^2 y - y^3 is 6 sin(3 theta); five sampled angles miss its peaks
    sj = sample_jet(parse_expr("3*x^2*y - y^3"), [Grid(0.0, 1.0, 2), Grid(0.0, 1.0, 2)], 3)
    with override_settings(directions=5):
        lower = float(sj.diagonal_sup(3).max())
        upper = float(sj.norm_upper(3).max())
    assert lower == pytest.approx(6.0 * math.sin(3 * math.pi / 5))
    assert upper >= 6.0


@pytest.mark.parametrize("text", ["exp(x)", "sin(x)", POLY6])
def test_seminorm_grows_under_refinement(text):
    e = parse_expr(text)
    coarse = seminorm_K_rho(e, [Grid(0.0, 1.0, 5)], ONE, 1.0, 8)
    fine = seminorm_K_rho(e, [Grid(0.0, 1.0, 9)], ONE, 1.0, 8)
    assert fine.lower >= coarse.lower
    assert all(f.lower >= c.lower for f, c in zip(fine.rows, coarse.rows))


@pytest.mark.parametrize("text", ["exp(x)", "sin(x)", POLY6])
def test_seminorm_shrinks_as_rho_grows(text):
    sj = sample_jet(parse_expr(text), [DYADIC], 8)
    norms = [seminorm_from_samples(sj, ONE, rho).lower for rho in (0.5, 1.0, 2.0, 4.0)]
    assert norms == sorted(norms, reverse=True)


def test_seminorm_report_echoes_its_inputs():
    with override_settings(decay_ratio=0.5):
        report = seminorm_K_rho(parse_expr("exp(x)"), [DYADIC], GevreySequence(1.0), 2.0, 4)
    assert report.grid == ["0.0,1.0,9"]
    assert report.sequence == "gevrey:s=1.0"
    assert report.thresholds["decay_ratio"] == 0.5


def test_polarization_bracket():
    assert polarization_bracket(2.0, 3) == (2.0, pytest.approx(2.0 * (2 * math.e) ** 3))
    with pytest.raises(InvalidParameter):
        polarization_bracket(-1.0, 2)


# Whitney remainders


def test_remainder_of_polynomials_is_exact():
    sj = sample_jet(parse_expr("1 + 2*x + 3*x^2"), [DYADIC], 4)
    assert whitney_remainder_seminorm(sj, 2, 0) == 0.0
    assert whitney_remainder_seminorm(sj, 1, 0) == pytest.approx(6.0, rel=1e-12)
    assert whitney_remainder_seminorm(sj, 0, 1) == pytest.approx(6.0, rel=1e-12)


def test_remainder_needs_enough_order():
    sj = sample_jet(parse_expr("exp(x)"), [DYADIC], 3)
    with pytest.raises(OrderInsufficient):
        whitney_remainder_seminorm(sj, 3, 1)
    with pytest.raises(OrderInsufficient):
        verify_taylor_remainder_bound(sj, ONE, 1.0, N=5)


@pytest.mark.parametrize("text, grid", [
    ("exp(x)", UNIT),
    ("sin(x)", Grid(0.0, math.pi, 65)),
    ("1 + 2*x + 5*x^3", DYADIC),
    ("sin(x)", UNIT),
    ("x*exp(0.3)", UNIT),
    ("0.7*exp(x)", UNIT),
    (POLY6, DYADIC),
])
def test_taylor_remainder_bound_holds(text, grid):
    report = verify_taylor_remainder_bound(sample_jet(parse_expr(text), [grid], 10), ONE, 1.0)
    assert report.verdict.status == Status.holds
    assert all(row.sound for row in report.rows)
    assert len(report.rows) == 55
    assert report.max_violation == 0.0


def test_remainder_bound_in_two_variables():
    sj = sample_jet(parse_expr("exp(x+y)"), [Grid(0.0, 1.0, 5), Grid(0.0, 1.0, 5)], 4)
    report = verify_taylor_remainder_bound(sj, ONE, 1.0)
    assert report.verdict.status == Status.holds


def test_whitney_report():
    sj = sample_jet(parse_expr("exp(x)"), [DYADIC], 6)
    report = whitney_report(sj, 2, 1, ONE, 1.0)
    assert report.n == 2 and report.k == 1
    assert report.value <= math.e * (1 + 1e-9)
    assert report.witness is not None
    assert report.bound.verdict.status == Status.holds


def test_general_weight_norm_dominates_seminorm():
    sj = sample_jet(parse_expr("exp(x)"), [UNIT], 10)
    r = TestSequence.build(ONE, 10)
    norm = general_weight_norm(sj, ONE, r)
    assert norm >= seminorm_from_samples(sj, ONE, 1.0).lower
    with pytest.raises(OrderInsufficient):
        general_weight_norm(sj, ONE, r, N=11)


# Exponential law


@pytest.mark.parametrize("M, sigma", [(ONE, 1.0), (GevreySequence(1.0), 2.0)])
def test_exponential_law_on_exp(M, sigma):
    grid = Grid(0.0, 1.0, 9)
    report = explaw_verify(parse_expr("exp(x+y)"), grid, grid, M, sigma, 1.0, 1.0, 8)
    assert report.verdict.status == Status.holds
    assert report.violations_lower == 0
    assert report.violations_upper == 0
    assert report.min_slack_upper >= 0
    assert report.min_slack_lower >= -1e-12
    assert report.rho == pytest.approx(1.0 / (2 * sigma))
    assert report.sup_joint <= report.sup_mixed * (1 + 1e-12)


def test_exponential_law_preconditions():
    e = parse_expr("exp(x+y)")
    grid = Grid(0.0, 1.0, 5)
    with pytest.raises(PreconditionFailed):
        explaw_verify(e, grid, grid, ConstantSequence(2.0), 1.0, 1.0, 1.0, 4)
    with pytest.raises(PreconditionFailed):
        explaw_verify(e, grid, grid, GevreySequence(1.0), 1.0, 1.0, 1.0, 4)
    with pytest.raises(InvalidParameter):
        explaw_verify(e, grid, grid, ONE, 0.0, 1.0, 1.0, 4)


# Divergence tables


def test_counterexample_table():
    report = counterexample_54(2.0, 8, 1.0)
    assert report.verdict.status == Status.holds
    assert report.strictly_increasing
    assert [r.n for r in report.rows] == list(range(1, 9))
    assert all(r.valid for r in report.rows)
    assert report.rows[-1].lower_bound == pytest.approx(16777216.0)
    assert all(r.log_term >= r.log_lower_bound for r in report.rows)
    assert [s.rho for s in report.series] == [1.0, 2.0, 4.0]
    assert all(s.stabilized for s in report.series)


def test_counterexample_rejects_bad_parameters():
    with pytest.raises(InvalidParameter):
        counterexample_54(1.0, 8, 1.0)
    with pytest.raises(InvalidParameter):
        counterexample_54(2.0, 0, 1.0)


def test_evaluation_divergence():
    report = evaluation_divergence(ONE, 1.0, 64)
    assert report.verdict.status == Status.holds
    assert report.rows[10].log_value == pytest.approx(10 * math.log(2.0))
    assert report.rows[10].value == pytest.approx(1024.0)
    with pytest.raises(InvalidParameter):
        evaluation_divergence(ONE, 1.0, 4)
