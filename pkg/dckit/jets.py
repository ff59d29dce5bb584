"""
Truncated formal jets f_0..f_K at a basepoint.

f_k is the k-th derivative value; the power-series coefficient is f_k/k!.
Coefficients are stored as (sign, log|f_k|) so that jets built from fast
growing weights such as q^(k^2) stay representable.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np
from scipy.special import gammaln

from dckit.analysis import decay_verdict, divergence_verdict, stabilization_verdict
from dckit.config import settings
from dckit.constructions import composed_weight_logs
from dckit.errors import (CertificateInvalid, FlagMismatch, InvalidParameter,
                          NonzeroConstantTerm, OrderTooLarge, ParseError)
from dckit.logmag import LogMagnitude, SignedLog, cancels, combine, logsum
from dckit.schemas import (CompositionBoundReport, JetCoefficient, JetReport,
                           MembershipReport, RadiusReport, Status, Verdict,
                           exp_or_none, finite_or_none)
from dckit.seq_core import WeightSequence, weighted_log_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FormalJet:
    signs: Tuple[int, ...]
    logmags: Tuple[float, ...]
    # orders whose value came out of a near-total cancellation
    cancelled: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.signs or len(self.signs) != len(self.logmags):
            raise InvalidParameter("a jet needs matching, nonempty sign and magnitude lists")
        for k, (s, lm) in enumerate(zip(self.signs, self.logmags)):
            if s not in (-1, 0, 1) or math.isnan(lm) or lm == math.inf:
                raise InvalidParameter(f"coefficient f_{k} is not finite")
            if (s == 0) != (lm == -math.inf):
                raise InvalidParameter(f"coefficient f_{k}: sign 0 must pair with zero magnitude")

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "FormalJet":
        coeffs = [SignedLog.from_value(float(v)) for v in values]
        return cls(tuple(c.sign for c in coeffs), tuple(c.logmag for c in coeffs))

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[SignedLog],
                          cancelled: Sequence[int] = ()) -> "FormalJet":
        return cls(tuple(c.sign for c in coeffs), tuple(c.logmag for c in coeffs),
                   tuple(cancelled))

    @classmethod
    def from_logs(cls, logmags: Sequence[float], signs: Optional[Sequence[int]] = None) -> "FormalJet":
        logmags = tuple(float(v) for v in logmags)
        if signs is None:
            signs = [0 if v == -math.inf else 1 for v in logmags]
        return cls(tuple(int(s) for s in signs), logmags)

    @classmethod
    def zero(cls, order: int) -> "FormalJet":
        return cls((0,) * (order + 1), (-math.inf,) * (order + 1))

    @classmethod
    def identity(cls, order: int) -> "FormalJet":
        """The jet of t -> t."""
        if order < 1:
            raise InvalidParameter("the identity jet needs order at least 1")
        signs = [0] * (order + 1)
        logmags = [-math.inf] * (order + 1)
        signs[1], logmags[1] = 1, 0.0
        return cls(tuple(signs), tuple(logmags))

    @property
    def order(self) -> int:
        return len(self.signs) - 1

    def coefficient(self, k: int) -> SignedLog:
        return SignedLog(self.signs[k], self.logmags[k])

    def value(self, k: int) -> float:
        return self.coefficient(k).value

    def values(self) -> List[float]:
        return [self.value(k) for k in range(self.order + 1)]

    def truncate(self, order: int) -> "FormalJet":
        if order > self.order:
            raise InvalidParameter(f"cannot extend a jet of order {self.order} to {order}")
        return FormalJet(self.signs[:order + 1], self.logmags[:order + 1],
                         tuple(k for k in self.cancelled if k <= order))

    def report(self) -> JetReport:
        return JetReport(
            order=self.order,
            coefficients=[JetCoefficient(k=k, sign=s, logmag=finite_or_none(lm))
                          for k, (s, lm) in enumerate(zip(self.signs, self.logmags))],
            cancelled_orders=list(self.cancelled))


def witness_jet(M: WeightSequence, K: int, c: float = 1.0, rho: float = 1.0) -> FormalJet:
    """f_k = c rho^k k! M_k."""
    if not (c > 0 and rho > 0):
        raise InvalidParameter("c and rho must be positive")
    ks = np.arange(K + 1)
    return FormalJet.from_logs(math.log(c) + ks * math.log(rho) + weighted_log_values(M, K))


def compositions(k: int, parts: Optional[int] = None) -> Iterator[Tuple[int, ...]]:
    """
    Integer compositions of k (into exactly ``parts`` positive parts when
    given), generated lazily in colex order.
    """
    if k < 0 or (parts is not None and parts < 0):
        raise InvalidParameter("k and parts must be nonnegative")
    if k == 0:
        if parts in (None, 0):
            yield ()
        return
    if parts == 0:
        return
    if parts is None:
        for last in range(1, k + 1):
            for prefix in compositions(k - last):
                yield prefix + (last,)
    else:
        for last in range(1, k - parts + 2):
            for prefix in compositions(k - last, parts - 1):
                yield prefix + (last,)


# Norms and membership


def jet_norm_rho(f: FormalJet, M: WeightSequence, rho: float) -> LogMagnitude:
    """Least C with |f_k| <= C rho^k k! M_k on the truncation."""
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidParameter(f"rho must be positive, got {rho}")
    ks = np.arange(f.order + 1)
    quotients = np.asarray(f.logmags) - ks * math.log(rho) - weighted_log_values(M, f.order)
    return LogMagnitude(float(np.max(quotients)))


def _log_growth(f: FormalJet, M: WeightSequence) -> Tuple[np.ndarray, np.ndarray]:
    """k = 1..K and log g_k with g_k = (|f_k|/(k! M_k))^(1/k)."""
    ks = np.arange(1, f.order + 1)
    w = weighted_log_values(M, f.order)
    return ks, (np.asarray(f.logmags[1:]) - w[1:]) / ks


def classify_membership(f: FormalJet, M: WeightSequence) -> MembershipReport:
    """
    Roumieu membership is boundedness of g_k, Beurling membership is g_k -> 0.

    rho_star, the max of g_k over the last half, estimates the least rho
    with f in the Roumieu ball of radius rho.
    """
    K = f.order
    if K < 8:
        raise InvalidParameter(f"classification needs order at least 8, got {K}")
    ks, log_g = _log_growth(f, M)
    half = log_g[ks >= K // 2]
    rho_star = exp_or_none(float(half.max()))

    roumieu = stabilization_verdict("roumieu_membership", ks, log_g, K)
    if roumieu.status == Status.inconclusive:
        growing = divergence_verdict("roumieu_membership", ks, log_g, K)
        if growing.status == Status.holds:
            roumieu = Verdict(property="roumieu_membership", status=Status.fails,
                              witness=growing.witness, statistic=growing.statistic,
                              log_statistic=growing.log_statistic,
                              kmax=K, params=growing.params,
                              note="growth ratio increases without bound")
    beurling = decay_verdict("beurling_membership", ks, log_g, K)
    return MembershipReport(sequence=M.render(), order=K, rho_star=rho_star,
                            roumieu=roumieu, beurling=beurling)


# Composition


def _power_layers(g: FormalJet, K: int):
    """
    Positive and negative parts of the series coefficients of (g/k!)^j.

    pos[j][k] (neg[j][k]) is the log of the sum of the positive (negative)
    products c_a1 ... c_aj over compositions a of k into j parts, with
    c_a = g_a/a!.
    """
    log_c = np.asarray(g.logmags[:K + 1]) - gammaln(np.arange(K + 1) + 1)
    sign_c = g.signs[:K + 1]
    pos = np.full((K + 1, K + 1), -math.inf)
    neg = np.full((K + 1, K + 1), -math.inf)
    for a in range(1, K + 1):
        if sign_c[a] > 0:
            pos[1, a] = log_c[a]
        elif sign_c[a] < 0:
            neg[1, a] = log_c[a]
    for j in range(2, K + 1):
        for k in range(j, K + 1):
            terms_pos, terms_neg = [], []
            for a in range(1, k - j + 2):
                if sign_c[a] == 0:
                    continue
                same, other = (terms_pos, terms_neg) if sign_c[a] > 0 else (terms_neg, terms_pos)
                same.append(log_c[a] + pos[j - 1, k - a])
                other.append(log_c[a] + neg[j - 1, k - a])
            pos[j, k] = logsum(terms_pos)
            neg[j, k] = logsum(terms_neg)
    return pos, neg


def compose_jets(f: FormalJet, g: FormalJet) -> FormalJet:
    """
    Faà di Bruno: (f∘g)_k/k! = sum_j f_j/j! sum_a prod_i g_ai/ai!, the inner
    sum over compositions a of k into j parts; (f∘g)_0 = f_0.

    The result is exact up to order min(K_f, K_g).  Positive and negative
    terms are accumulated separately; orders where they agree to
    cancellation_tol are listed in ``cancelled``.
    """
    if g.signs[0] != 0:
        raise NonzeroConstantTerm(f"g_0 = {g.value(0)!r}; composition needs g_0 = 0")
    K = min(f.order, g.order)
    if K > settings.max_compose_order:
        raise OrderTooLarge(K, settings.max_compose_order)
    pos, neg = _power_layers(g, K)
    log_f = np.asarray(f.logmags[:K + 1]) - gammaln(np.arange(K + 1) + 1)

    coeffs = [f.coefficient(0)]
    flagged = []
    for k in range(1, K + 1):
        terms_pos, terms_neg = [], []
        for j in range(1, k + 1):
            s = f.signs[j]
            if s == 0:
                continue
            same, other = (terms_pos, terms_neg) if s > 0 else (terms_neg, terms_pos)
            same.append(log_f[j] + pos[j, k])
            other.append(log_f[j] + neg[j, k])
        lp, ln = logsum(terms_pos), logsum(terms_neg)
        if cancels(lp, ln, settings.cancellation_tol):
            logger.warning("order %d: positive and negative parts cancel to %g relative",
                           k, settings.cancellation_tol)
            flagged.append(k)
        h = combine(lp, ln)
        if h.sign != 0:
            h = SignedLog(h.sign, h.logmag + float(gammaln(k + 1)))
        coeffs.append(h)
    return FormalJet.from_coefficients(coeffs, flagged)


def verify_composition_bound(f: FormalJet, g: FormalJet, M: WeightSequence, L: WeightSequence,
                             rho_f: float, C_f: float, rho_g: float, C_g: float) -> CompositionBoundReport:
    """
    Check |(f∘g)_k| / (k! (M∘L)_k) <= (rho_g (1 + rho_f C_g))^k rho_f C_f C_g / (1 + rho_f C_g)
    for k = 1..K, given certified bounds for f and g.
    """
    for name, x in (("rho_f", rho_f), ("C_f", C_f), ("rho_g", rho_g), ("C_g", C_g)):
        if not (math.isfinite(x) and x > 0):
            raise InvalidParameter(f"{name} must be positive, got {x}")
    tol = settings.bound_tol
    norm_f = jet_norm_rho(f, M, rho_f).value
    if norm_f > math.log(C_f) + tol:
        raise CertificateInvalid(
            f"f is not bounded by C_f rho_f^k k! M_k: needs C_f >= {math.exp(norm_f)!r}")
    norm_g = jet_norm_rho(g, L, rho_g).value
    if norm_g > math.log(C_g) + tol:
        raise CertificateInvalid(
            f"g is not bounded by C_g rho_g^k k! L_k: needs C_g >= {math.exp(norm_g)!r}")

    h = compose_jets(f, g)
    K = h.order
    params = {"bound_tol": tol}
    if K < 1:
        verdict = Verdict(property="composition_bound", status=Status.holds, kmax=K,
                          params=params, note="nothing to check at order 0")
        return CompositionBoundReport(order=K, rho_f=rho_f, c_f=C_f, rho_g=rho_g, c_g=C_g,
                                      min_log_slack=0.0, violations=[], verdict=verdict)

    ks = np.arange(1, K + 1)
    W = composed_weight_logs(M, L, K)
    lhs = np.asarray(h.logmags[1:]) - gammaln(ks + 1) - W[1:]
    growth = math.log(rho_g) + math.log1p(rho_f * C_g)
    rhs = ks * growth + math.log(rho_f * C_f * C_g) - math.log1p(rho_f * C_g)
    slack = rhs - lhs
    violations = [int(k) for k, s, r in zip(ks, slack, rhs) if s < -tol * (1.0 + abs(r))]
    min_slack = float(slack.min())
    if violations:
        verdict = Verdict(property="composition_bound", status=Status.fails,
                          witness=violations[0], statistic=min_slack, kmax=K, params=params)
    else:
        verdict = Verdict(property="composition_bound", status=Status.holds,
                          statistic=finite_or_none(min_slack), kmax=K, params=params)
    return CompositionBoundReport(
        order=K, rho_f=rho_f, c_f=C_f, rho_g=rho_g, c_g=C_g,
        min_log_slack=min_slack if math.isfinite(min_slack) else 0.0,
        violations=violations, verdict=verdict)


# Radius of convergence against test sequences


@dataclass(frozen=True)
class TestSequence:
    """
    A positive sequence r with its observed flags: r_k r_l >= r_{k+l} for
    k + l <= kmax, and the decay class of r_k^(1/k).
    """

    __test__ = False

    r: WeightSequence
    kmax: int
    submultiplicative: bool
    decay_class: Optional[str]

    @classmethod
    def build(cls, r: WeightSequence, kmax: Optional[int] = None) -> "TestSequence":
        kmax = settings.kmax if kmax is None else kmax
        if r.kmax_hint is not None:
            kmax = min(kmax, r.kmax_hint)
        if kmax < 8:
            raise InvalidParameter(f"test sequences need kmax at least 8, got {kmax}")
        l = r.logs(kmax)
        submultiplicative = True
        for a in range(0, kmax + 1):
            bs = np.arange(0, kmax - a + 1)
            gap = l[a] + l[bs] - l[a + bs]
            if np.any(gap < -settings.convexity_tol):
                submultiplicative = False
                break

        ks = np.arange(1, kmax + 1)
        roots = l[1:] / ks
        if decay_verdict("decay", ks, roots, kmax).status == Status.holds:
            decay_class = "all-rho"
        elif stabilization_verdict("decay", ks, roots, kmax).status == Status.holds:
            decay_class = "some-rho"
        else:
            decay_class = None
        logger.info("test sequence %s: submultiplicative=%s decay=%s",
                    r.render(), submultiplicative, decay_class)
        return cls(r, kmax, submultiplicative, decay_class)


_REQUIRED_DECAY = {
    "beurling": ("some-rho", "all-rho"),
    "roumieu": ("all-rho",),
}


def radius_test(a: FormalJet, r: TestSequence, delta: float,
                variant: str = "beurling") -> RadiusReport:
    """
    Boundedness of |a_k| r_k delta^k, with a_k read as series coefficients,
    next to the empirical radius 1/limsup |a_k|^(1/k).
    """
    if variant not in _REQUIRED_DECAY:
        raise InvalidParameter(f"unknown variant {variant!r}")
    if not (math.isfinite(delta) and delta > 0):
        raise InvalidParameter(f"delta must be positive, got {delta}")
    if not r.submultiplicative or r.decay_class not in _REQUIRED_DECAY[variant]:
        raise FlagMismatch(
            f"{variant} variant needs a submultiplicative r with decay class "
            f"{' or '.join(_REQUIRED_DECAY[variant])}; got submultiplicative="
            f"{r.submultiplicative}, decay class {r.decay_class}")
    K = min(a.order, r.kmax)
    if K < 8:
        raise InvalidParameter(f"radius test needs order at least 8, got {K}")

    ks = np.arange(K + 1)
    log_a = np.asarray(a.logmags[:K + 1])
    terms = log_a + r.r.logs(K) + ks * math.log(delta)
    params = {"delta": delta, "variant": variant}
    verdict = stabilization_verdict("bounded", ks, terms, K, params)
    if verdict.status == Status.inconclusive:
        growing = divergence_verdict("bounded", ks, terms, K, params)
        if growing.status == Status.holds:
            verdict = growing.model_copy(update={
                "status": Status.fails, "note": "monotone divergence over the last half"})

    roots = log_a[1:] / ks[1:]
    top = float(roots[ks[1:] >= K // 2].max())
    if np.all(roots == -math.inf):
        estimate, infinite = None, True
    else:
        estimate = exp_or_none(-top) if top != -math.inf else None
        infinite = decay_verdict("root_decay", ks[1:], roots, K).status == Status.holds
    return RadiusReport(variant=variant, delta=delta, submultiplicative=r.submultiplicative,
                        decay_class=r.decay_class, radius_estimate=estimate,
                        radius_infinite=infinite, verdict=verdict)


# Jet files: "k,value" or "k,sign,log10magnitude" per line


def read_jet_csv(path: Union[str, Path]) -> FormalJet:
    try:
        rows = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        logger.warning("cannot parse jet file %s: %s", path, exc)
        raise ParseError(str(path), 0, "rows k,value or k,sign,log10magnitude")
    if rows.shape[0] == 0 or rows.shape[1] not in (2, 3):
        raise ParseError(str(path), 0, "rows k,value or k,sign,log10magnitude")
    ks = rows[:, 0]
    if np.any(ks < 0) or np.any(ks != np.round(ks)) or len(set(ks.tolist())) != len(ks):
        raise InvalidParameter(f"{path}: orders must be distinct nonnegative integers")
    K = int(ks.max())
    signs = [0] * (K + 1)
    logmags = [-math.inf] * (K + 1)
    for row in rows:
        k = int(row[0])
        if rows.shape[1] == 2:
            c = SignedLog.from_value(float(row[1]))
            signs[k], logmags[k] = c.sign, c.logmag
        else:
            signs[k] = int(row[1])
            logmags[k] = float(row[2]) * math.log(10.0) if signs[k] else -math.inf
    return FormalJet(tuple(signs), tuple(logmags))


def write_jet_csv(f: FormalJet, out: TextIO) -> None:
    for k, (s, lm) in enumerate(zip(f.signs, f.logmags)):
        out.write(f"{k},{s},{lm / math.log(10.0)!r}\n")
