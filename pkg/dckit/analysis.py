"""
Structural properties of weight sequences and inclusions between classes.

Finite conditions (convexity, normalization) are decided exactly up to a
log-domain tolerance.  Conditions about sups, limits and infinite sums can
only be observed on a truncation 0..kmax; they are three-valued and use the
windowed tests below, whose thresholds live in ``settings``.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Tuple

import numpy as np

from dckit.config import settings
from dckit.errors import DegenerateFit, InvalidParameter
from dckit.schemas import (ClassificationReport, InclusionReport,
                           QuasianalyticityReport, Status, Verdict,
                           exp_or_none, finite_or_none)
from dckit.seq_core import WeightSequence, shift, weighted_log_values

logger = logging.getLogger(__name__)

# slack for "nonincreasing"/"nondecreasing" comparisons of log statistics
_MONOTONE_TOL = 1e-12


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InvalidParameter(message)


def _stat(x: float) -> dict:
    """statistic and log_statistic fields for a log-domain value."""
    return {"statistic": exp_or_none(x), "log_statistic": finite_or_none(x)}


def _index_at_most(ks: np.ndarray, bound: int) -> int:
    """Position of the largest k <= bound."""
    return int(np.searchsorted(ks, bound, side="right")) - 1


def _last_half(ks: np.ndarray, log_stat: np.ndarray, kmax: int):
    """
    Finite entries of the last half of the window, plus whether the
    statistic has vanished there.

    Zero terms (log -inf) are skipped rather than read as decay.  The
    statistic counts as vanished when no finite entry is left, or when the
    trailing run of zeros has length at least 2 and is longer than every
    gap between nonzero terms.
    """
    half = ks >= kmax // 2
    k_half, s_half = ks[half], log_stat[half]
    finite = np.isfinite(s_half)
    positions = np.nonzero(finite)[0]
    if positions.size == 0:
        return k_half[finite], s_half[finite], True
    trailing = len(s_half) - 1 - int(positions[-1])
    widest_gap = int(np.max(np.diff(positions))) - 1 if positions.size > 1 else 0
    vanishing = trailing >= 2 and trailing > widest_gap
    return k_half[finite], s_half[finite], vanishing


# Windowed tests shared by the sequence and jet modules


def stabilization_verdict(prop: str, ks: np.ndarray, log_stat: np.ndarray,
                          kmax: int, params: Optional[dict] = None) -> Verdict:
    """Holds when the running max gains < stabilization_tol over the last quarter."""
    running = np.maximum.accumulate(log_stat)
    i_q = _index_at_most(ks, (3 * kmax) // 4)
    i_max = int(np.argmax(log_stat))
    gain = running[-1] - running[max(i_q, 0)]
    stable = running[-1] == -math.inf or gain <= math.log1p(settings.stabilization_tol)
    params = dict(params or {}, stabilization_tol=settings.stabilization_tol)
    if stable:
        return Verdict(property=prop, status=Status.holds, witness=int(ks[i_max]),
                       **_stat(running[-1]), kmax=kmax, params=params)
    return Verdict(property=prop, status=Status.inconclusive, witness=int(ks[i_max]),
                   **_stat(running[-1]), kmax=kmax, params=params,
                   note="running max still growing over the last quarter; "
                        "a truncation cannot refute boundedness")


def decay_verdict(prop: str, ks: np.ndarray, log_r: np.ndarray, kmax: int,
                  params: Optional[dict] = None) -> Verdict:
    """
    Decide r_k -> 0 on the nonzero terms of the last half of the indices.

    Holds: r vanishes (see ``_last_half``), or r is nonincreasing and
    r_last < decay_ratio * r_first.
    Fails: no decrease at all, or log r = A + B/k up to limit_fit_tol, i.e.
    r converges to the positive limit e^A.
    """
    params = dict(params or {}, decay_ratio=settings.decay_ratio,
                  limit_fit_tol=settings.limit_fit_tol)
    k_fin, r_fin, vanishing = _last_half(ks, log_r, kmax)
    if vanishing:
        return Verdict(property=prop, status=Status.holds, statistic=0.0,
                       kmax=kmax, params=params, note="statistic vanishes")
    if len(r_fin) < 2:
        return Verdict(property=prop, status=Status.inconclusive, **_stat(r_fin[-1]),
                       kmax=kmax, params=params, note="too few nonzero terms")
    start = r_fin[0]
    tol = _MONOTONE_TOL * (1.0 + np.abs(r_fin[1:]))
    nonincreasing = bool(np.all(np.diff(r_fin) <= tol))
    if nonincreasing and r_fin[-1] < start + math.log(settings.decay_ratio):
        return Verdict(property=prop, status=Status.holds, witness=int(k_fin[-1]),
                       **_stat(r_fin[-1]), kmax=kmax, params=params)

    i_min = int(np.argmin(r_fin))
    if r_fin[i_min] >= start - _MONOTONE_TOL * (1.0 + abs(start)):
        return Verdict(property=prop, status=Status.fails, witness=int(k_fin[i_min]),
                       **_stat(r_fin[i_min]), kmax=kmax, params=params,
                       note="no decrease over the last half")
    if len(k_fin) >= 3:
        design = np.column_stack([np.ones(len(k_fin)), 1.0 / k_fin])
        coef, *_ = np.linalg.lstsq(design, r_fin, rcond=None)
        residual = float(np.max(np.abs(design @ coef - r_fin)))
        if residual <= settings.limit_fit_tol:
            return Verdict(property=prop, status=Status.fails, witness=int(k_fin[i_min]),
                           **_stat(coef[0]), kmax=kmax, params=params,
                           note="statistic converges to a positive limit")
    return Verdict(property=prop, status=Status.inconclusive, **_stat(r_fin[-1]),
                   kmax=kmax, params=params, note="decay too slow to decide on this truncation")


def divergence_verdict(prop: str, ks: np.ndarray, log_stat: np.ndarray, kmax: int,
                       params: Optional[dict] = None) -> Verdict:
    """
    Decide stat_k -> infinity on the nonzero terms of the last half.

    Holds: nondecreasing and final >= growth_factor * first.
    Fails: the statistic vanishes, or final <= (1 + stabilization_tol) *
    running max up to the first nonzero term of the half.
    """
    params = dict(params or {}, growth_factor=settings.growth_factor,
                  stabilization_tol=settings.stabilization_tol)
    k_fin, s_fin, vanishing = _last_half(ks, log_stat, kmax)
    if vanishing:
        return Verdict(property=prop, status=Status.fails, witness=int(ks[-1]),
                       statistic=0.0, kmax=kmax, params=params, note="statistic vanishes")
    steps = np.diff(s_fin)
    nondecreasing = bool(np.all(steps >= -_MONOTONE_TOL * (1.0 + np.abs(s_fin[1:]))))
    if nondecreasing and s_fin[-1] - s_fin[0] >= math.log(settings.growth_factor):
        return Verdict(property=prop, status=Status.holds, witness=int(k_fin[-1]),
                       **_stat(s_fin[-1]), kmax=kmax, params=params)
    head_max = float(np.max(log_stat[ks <= k_fin[0]]))
    if s_fin[-1] <= head_max + math.log1p(settings.stabilization_tol):
        return Verdict(property=prop, status=Status.fails, witness=int(k_fin[-1]),
                       **_stat(s_fin[-1]), kmax=kmax, params=params,
                       note="statistic stays bounded over the truncation")
    return Verdict(property=prop, status=Status.inconclusive, **_stat(s_fin[-1]),
                   kmax=kmax, params=params)


# Finite checks


def _convexity_verdict(prop: str, values: np.ndarray, kmax: int) -> Verdict:
    second = values[:-2] + values[2:] - 2.0 * values[1:-1]
    bad = np.nonzero(second < -settings.convexity_tol)[0]
    params = {"convexity_tol": settings.convexity_tol}
    if bad.size:
        k = int(bad[0]) + 1
        return Verdict(property=prop, status=Status.fails, witness=k,
                       statistic=float(second[bad[0]]), kmax=kmax, params=params)
    return Verdict(property=prop, status=Status.holds, statistic=float(second.min()),
                   kmax=kmax, params=params)


def is_log_convex(M: WeightSequence, kmax: int) -> Verdict:
    _require(kmax >= 2, "kmax must be at least 2")
    return _convexity_verdict("log_convex", M.logs(kmax), kmax)


def is_weakly_log_convex(M: WeightSequence, kmax: int) -> Verdict:
    _require(kmax >= 2, "kmax must be at least 2")
    return _convexity_verdict("weakly_log_convex", weighted_log_values(M, kmax), kmax)


def is_normalized(M: WeightSequence) -> Verdict:
    """M_0 = 1 <= M_1."""
    l0, l1 = M.log_at(0), M.log_at(1)
    tol = settings.convexity_tol
    if abs(l0) > tol:
        return Verdict(property="normalized", status=Status.fails, witness=0,
                       statistic=math.exp(l0), kmax=1)
    if l1 < -tol:
        return Verdict(property="normalized", status=Status.fails, witness=1,
                       statistic=math.exp(l1), kmax=1)
    return Verdict(property="normalized", status=Status.holds, kmax=1)


def log_convex_consequences(M: WeightSequence, kmax: int) -> Verdict:
    """(M_k/M_0)^(1/k) nondecreasing and M_l M_k <= M_0 M_{l+k}."""
    _require(kmax >= 2, "kmax must be at least 2")
    l = M.logs(kmax)
    ks = np.arange(1, kmax + 1)
    roots = (l[1:] - l[0]) / ks
    drops = np.nonzero(np.diff(roots) < -settings.convexity_tol * (1.0 + np.abs(roots[1:])))[0]
    if drops.size:
        return Verdict(property="log_convex_consequences", status=Status.fails,
                       witness=int(drops[0]) + 2, kmax=kmax,
                       note="(M_k/M_0)^(1/k) decreases")
    for a in range(1, kmax):
        bs = np.arange(1, kmax - a + 1)
        gap = l[0] + l[a + bs] - l[a] - l[bs]
        bad = np.nonzero(gap < -settings.convexity_tol * (1.0 + np.abs(l[a + bs])))[0]
        if bad.size:
            return Verdict(property="log_convex_consequences", status=Status.fails,
                           witness=(a, int(bs[bad[0]])), kmax=kmax,
                           note="M_l M_k exceeds M_0 M_(l+k)")
    return Verdict(property="log_convex_consequences", status=Status.holds, kmax=kmax)


# Sup statistics


def derivation_closure_sup(M: WeightSequence, kmax: int) -> Tuple[Optional[float], Verdict]:
    """
    sup_k (M_{k+1}/M_k)^(1/k); a truncation never yields Fails.

    The sup is None when it overflows a float; verdict.log_statistic still
    carries its log.
    """
    _require(kmax >= 2, "kmax must be at least 2")
    l = M.logs(kmax + 1)
    ks = np.arange(1, kmax + 1)
    stat = (l[2:] - l[1:-1]) / ks
    verdict = stabilization_verdict("derivation_closed", ks, stat, kmax)
    return verdict.statistic, verdict


def _moderate_row(l: np.ndarray, j: int, kmax: int, cut: int):
    ks = np.arange(1, kmax - j + 1)
    t = (l[j + ks] - l[j] - l[ks]) / (j + ks)
    i = int(np.argmax(t))
    head = t[: max(cut - j, 0)]
    return float(t[i]), int(ks[i]), float(head.max()) if head.size else -math.inf


def moderate_growth_sup(M: WeightSequence, kmax: int) -> Tuple[Optional[float], Verdict]:
    """
    sup over j, k >= 1, j + k <= kmax of (M_{j+k}/(M_j M_k))^(1/(j+k)).

    Rows j are scanned by a worker pool; the reduction keeps the first
    maximum so ties resolve to the lexicographically smallest (j, k).
    The sup is None on overflow, with its log in verdict.log_statistic.
    """
    _require(kmax >= 2, "kmax must be at least 2")
    l = M.logs(kmax)
    cut = (3 * kmax) // 4
    rows = range(1, kmax)
    with ThreadPoolExecutor(max_workers=settings.worker_count) as pool:
        results = list(pool.map(lambda j: _moderate_row(l, j, kmax, cut), rows))
    best, witness, head_best = -math.inf, (1, 1), -math.inf
    for j, (value, k, head) in zip(rows, results):
        if value > best:
            best, witness = value, (j, k)
        head_best = max(head_best, head)
    params = {"stabilization_tol": settings.stabilization_tol}
    if best - head_best <= math.log1p(settings.stabilization_tol):
        verdict = Verdict(property="moderate_growth", status=Status.holds, witness=witness,
                          **_stat(best), kmax=kmax, params=params)
    else:
        verdict = Verdict(property="moderate_growth", status=Status.inconclusive,
                          witness=witness, **_stat(best), kmax=kmax, params=params,
                          note="sup still growing over the last quarter of j+k")
    return verdict.statistic, verdict


def _log_ratio_roots(M: WeightSequence, N: WeightSequence, kmax: int):
    ks = np.arange(1, kmax + 1)
    return ks, (M.logs(kmax)[1:] - N.logs(kmax)[1:]) / ks


def ratio_root_sup(M: WeightSequence, N: WeightSequence, kmax: int) -> Optional[float]:
    """sup_k (M_k/N_k)^(1/k), or None when it overflows a float."""
    _require(kmax >= 1, "kmax must be at least 1")
    _, stat = _log_ratio_roots(M, N, kmax)
    return exp_or_none(float(stat.max()))


def triangle_lhd(M: WeightSequence, N: WeightSequence, kmax: int) -> Verdict:
    """M ◁ N, i.e. (M_k/N_k)^(1/k) -> 0."""
    _require(kmax >= 8, "kmax must be at least 8")
    ks, stat = _log_ratio_roots(M, N, kmax)
    return decay_verdict("roumieu_into_beurling", ks, stat, kmax)


def inclusion_relation(M: WeightSequence, N: WeightSequence, kmax: int) -> InclusionReport:
    _require(kmax >= 8, "kmax must be at least 8")
    ks, stat = _log_ratio_roots(M, N, kmax)
    bounded = stabilization_verdict("beurling_inclusion", ks, stat, kmax)
    top = float(stat.max())
    return InclusionReport(
        m=M.render(), n=N.render(), kmax=kmax,
        ratio_root_sup=exp_or_none(top),
        log_ratio_root_sup=top,
        beurling_inclusion=bounded,
        roumieu_inclusion=bounded.model_copy(update={"property": "roumieu_inclusion"}),
        roumieu_into_beurling=decay_verdict("roumieu_into_beurling", ks, stat, kmax),
    )


def limit_conditions(M: WeightSequence, kmax: int) -> Tuple[Verdict, Verdict]:
    """M_{k+1}/M_k -> infinity and M_k^(1/k) -> infinity."""
    _require(kmax >= 8, "kmax must be at least 8")
    l = M.logs(kmax)
    ratio_ks = np.arange(0, kmax)
    ratio = divergence_verdict("ratio_to_infinity", ratio_ks, l[1:] - l[:-1], kmax)
    root_ks = np.arange(1, kmax + 1)
    root = divergence_verdict("root_to_infinity", root_ks, l[1:] / root_ks, kmax)
    return ratio, root


# Quasianalyticity


def _checkpoints(last: int):
    points, k = [], 1
    while k < last:
        points.append(k)
        k *= 2
    points.append(last)
    return points


def quasianalytic_verdict(M: WeightSequence, criterion: int, kmax: int) -> QuasianalyticityReport:
    """
    Divergence of the Denjoy-Carleman sums built from minorants of k!M_k.

    The summands are fitted by c k^(-p) on the last half of the indices:
    p <= 1 reads as divergence (quasianalytic), p >= 1 + qa_margin as
    convergence.
    """
    from dckit.constructions import increasing_minorant, log_convex_minorant

    _require(criterion in (2, 3, 4), f"unknown criterion {criterion}")
    _require(kmax >= 32, "kmax must be at least 32")
    if criterion == 2:
        minorant = increasing_minorant(M, kmax)
        ks = np.arange(1, kmax + 1)
        log_t = -np.asarray(minorant.log_values)
    else:
        lc = np.asarray(log_convex_minorant(M, kmax).log_values)
        if criterion == 3:
            ks = np.arange(1, kmax + 1)
            log_t = -lc[1:] / ks
        else:
            ks = np.arange(0, kmax)
            log_t = lc[:-1] - lc[1:]

    window = (ks >= kmax // 2) & np.isfinite(log_t)
    if int(window.sum()) < settings.min_fit_terms:
        raise DegenerateFit(f"only {int(window.sum())} positive terms in the fit window")
    slope, _ = np.polyfit(np.log(ks[window]), log_t[window], 1)
    p = float(-slope)

    with np.errstate(over="ignore", under="ignore"):
        sums = np.minimum(np.cumsum(np.exp(log_t)), np.finfo(float).max)
    partial = [(int(ks[i]), float(sums[i])) for i in
               (_index_at_most(ks, c) for c in _checkpoints(int(ks[-1])))]

    margin = settings.qa_margin
    params = {"criterion": criterion, "qa_margin": margin, "fit_from": kmax // 2}
    if p <= 1.0:
        verdict = Verdict(property="quasianalytic", status=Status.holds, statistic=p,
                          kmax=kmax, params=params, note="summands decay no faster than 1/k")
    elif p >= 1.0 + margin:
        verdict = Verdict(property="quasianalytic", status=Status.fails, witness=int(ks[-1]),
                          statistic=p, kmax=kmax, params=params,
                          note="summands decay like k^-p with p > 1")
    else:
        verdict = Verdict(property="quasianalytic", status=Status.inconclusive, statistic=p,
                          kmax=kmax, params=params, note="tail exponent inside the margin")
    logger.info("criterion %d: fitted tail exponent %.6f", criterion, p)
    return QuasianalyticityReport(criterion=criterion, partial_sums=partial,
                                  tail_exponent=p, verdict=verdict)


def convention_report(M: WeightSequence, kmax: int) -> ClassificationReport:
    """Every standing condition on one sequence."""
    hint = M.kmax_hint
    closure_kmax = kmax if hint is None else min(kmax, hint - 1)
    ratio, root = limit_conditions(M, kmax)
    _, closure = derivation_closure_sup(M, closure_kmax)
    _, moderate = moderate_growth_sup(M, kmax)
    quasi = []
    if kmax >= 32:
        quasi = [quasianalytic_verdict(M, c, kmax) for c in (2, 3, 4)]
    else:
        logger.info("kmax=%d too short for the quasianalyticity fit", kmax)
    comparison = None
    if closure_kmax >= 8:
        comparison = inclusion_relation(shift(M), M, closure_kmax)
    return ClassificationReport(
        sequence=M.render(), kmax=kmax,
        normalized=is_normalized(M),
        log_convex=is_log_convex(M, kmax),
        weakly_log_convex=is_weakly_log_convex(M, kmax),
        derivation_closed=closure,
        moderate_growth=moderate,
        ratio_to_infinity=ratio,
        root_to_infinity=root,
        quasianalytic=quasi,
        shift_comparison=comparison,
        thresholds=settings.thresholds(),
    )
