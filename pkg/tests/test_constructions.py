import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dckit.constructions import (PiecewiseAffine, compose_weights, composition_domination,
                                 increasing_minorant, log_convex_minorant, lower_hull,
                                 majorant_construction)
from dckit.errors import InsufficientData, InvalidParameter, NotWeaklyLogConvex
from dckit.jets import compositions, witness_jet
from dckit.schemas import Status
from dckit.seq_core import (ConstantSequence, ExplicitSequence, GevreySequence,
                            weighted_log_values)

positive_lists = st.lists(st.floats(0.01, 100.0), min_size=3, max_size=25)


# Minorants


def test_log_convex_envelope_by_hand():
    M = ExplicitSequence.from_values([1.0, 4.0, 1.0, 8.0 / 3.0])
    minorant = log_convex_minorant(M, 3)
    assert list(minorant.log_values) == pytest.approx(
        [0.0, 0.5 * math.log(2.0), math.log(2.0), math.log(16.0)])
    assert minorant.hull_vertices == (0, 2, 3)
    report = minorant.report(M)
    assert report.kind == "log_convex"
    assert report.offset == 0
    assert report.kmax == 3


@settings(max_examples=50, deadline=None)
@given(positive_lists)
def test_increasing_minorant_matches_brute_force(values):
    M = ExplicitSequence.from_values(values)
    kmax = len(values) - 1
    minorant = increasing_minorant(M, kmax)
    w = weighted_log_values(M, kmax)
    for k in range(1, kmax + 1):
        expected = min(w[j] / j for j in range(k, kmax + 1))
        assert minorant.log_values[k - 1] == pytest.approx(expected, abs=1e-12)
    assert np.all(np.diff(minorant.log_values) >= 0)


@settings(max_examples=50, deadline=None)
@given(positive_lists)
def test_log_convex_minorant_is_the_greatest_convex_minorant(values):
    M = ExplicitSequence.from_values(values)
    kmax = len(values) - 1
    env = np.asarray(log_convex_minorant(M, kmax).log_values)
    w = weighted_log_values(M, kmax)
    assert np.all(env <= w + 1e-12)
    assert np.all(env[:-2] + env[2:] - 2 * env[1:-1] >= -1e-9)
    # the lower envelope at k is the least chord value over i <= k <= j
    for k in range(kmax + 1):
        chords = [w[k]]
        for i in range(k):
            for j in range(k + 1, kmax + 1):
                chords.append(w[i] + (w[j] - w[i]) * (k - i) / (j - i))
        assert env[k] == pytest.approx(min(chords), abs=1e-9)


def test_lower_hull_drops_collinear_points():
    assert lower_hull(np.array([0.0, 1.0, 2.0, 3.0])) == [0, 3]
    assert lower_hull(np.array([0.0, -1.0, 0.0])) == [0, 1, 2]


def test_minorant_bounds():
    with pytest.raises(InvalidParameter):
        increasing_minorant(ConstantSequence(1.0), 0)
    with pytest.raises(InvalidParameter):
        log_convex_minorant(ConstantSequence(1.0), 1)


# Composed weights


def brute_composed(log_m, log_l, k):
    if k == 0:
        return log_m[0]
    return max(log_m[len(a)] + sum(log_l[x] for x in a) for a in compositions(k))


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=13, max_size=13),
       st.lists(st.floats(0.1, 10.0), min_size=13, max_size=13))
def test_compose_weights_matches_enumeration(m, l):
    M, L = ExplicitSequence.from_values(m), ExplicitSequence.from_values(l)
    composed = compose_weights(M, L, 12)
    log_m, log_l = M.logs(12), L.logs(12)
    for k in range(13):
        assert composed.log_at(k) == pytest.approx(brute_composed(log_m, log_l, k), abs=1e-12)


def test_compose_constant_weights():
    composed = compose_weights(ConstantSequence(1.0), ConstantSequence(1.0), 10)
    assert composed.logs(10).tolist() == pytest.approx([0.0] * 11, abs=0)
    assert composed.kmax_hint == 10


def test_composition_domination():
    assert composition_domination(GevreySequence(1.0), 12).status == Status.holds
    assert composition_domination(ConstantSequence(2.0), 12).status == Status.holds
    verdict = composition_domination(ExplicitSequence.from_values([1.0, 1.0, 10.0, 10.0]), 3)
    assert verdict.status == Status.fails
    assert verdict.witness == (2, 3)



def brute_domination(log_m, kmax, tol):
    """First (j, k) with M_1^j M_k < M_j M_a1 ... M_aj, scanning j then k."""
    for j in range(1, kmax + 1):
        for k in range(j, kmax + 1):
            for a in compositions(k, j):
                gap = j * log_m[1] + log_m[k] - log_m[j] - sum(log_m[x] for x in a)
                if gap < -tol * (1.0 + abs(log_m[k])):
                    return j, k
    return None


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 10.0), min_size=2, max_size=11))
def test_composition_domination_matches_enumeration(values):
    M = ExplicitSequence.from_values(values)
    kmax = len(values) - 1
    verdict = composition_domination(M, kmax)
    expected = brute_domination(M.logs(kmax), kmax, 1e-9)
    if expected is None:
        assert verdict.status == Status.holds
    else:
        assert verdict.status == Status.fails
        assert verdict.witness == expected


# Majorant


def test_piecewise_affine():
    phi = PiecewiseAffine(((0, 0.0), (2, 2.0), (4, 6.0)))
    assert phi(1) == pytest.approx(1.0)
    assert phi(3) == pytest.approx(4.0)
    assert phi(5) == pytest.approx(8.0)
    assert phi.slopes.tolist() == [1.0, 2.0]
    assert phi.intercepts.tolist() == [0.0, -2.0]
    assert phi.is_convex()
    assert not PiecewiseAffine(((0, 0.0), (1, 2.0), (2, 3.0))).is_convex()
    with pytest.raises(InvalidParameter):
        PiecewiseAffine(((1, 0.0), (2, 1.0)))


def test_majorant_for_squared_factorials():
    f = witness_jet(GevreySequence(1.0), 200)
    majorant = majorant_construction(ConstantSequence(1.0), f)
    report = majorant.report
    assert [n.k for n in report.nodes] == [2, 9]
    assert report.witness_verified
    assert report.precondition_checked
    for node in report.nodes:
        assert node.witness * node.b == pytest.approx(1.0, abs=1e-9)
    assert majorant.phi.is_convex()
    ks = np.arange(1, 201)
    assert np.all(np.diff(majorant.phi(ks) / ks) >= -1e-12)
    assert majorant.L.kmax_hint == 200


def test_majorant_rejects_non_weakly_log_convex():
    M = ExplicitSequence.from_values([1.0, 4.0, 1.0, 8.0 / 3.0])
    with pytest.raises(NotWeaklyLogConvex) as info:
        majorant_construction(M, witness_jet(ConstantSequence(1.0), 3))
    assert info.value.witness == 1


def test_majorant_needs_two_nodes():
    with pytest.raises(InsufficientData):
        majorant_construction(ConstantSequence(1.0), witness_jet(ConstantSequence(1.0), 10))


def test_majorant_schedules_must_be_positive():
    f = witness_jet(GevreySequence(1.0), 50)
    with pytest.raises(InvalidParameter):
        majorant_construction(ConstantSequence(1.0), f, a_schedule=lambda j: -1.0)
