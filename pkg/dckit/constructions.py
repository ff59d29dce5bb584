"""
Minorants, composed weights and the majorant sequence built from a jet
with exploding growth ratios.
"""

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterator, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from dckit.analysis import is_weakly_log_convex
from dckit.config import settings
from dckit.errors import InsufficientData, InvalidParameter, NotWeaklyLogConvex
from dckit.schemas import (MajorantNode, MajorantReport, MinorantReport, Status,
                           Verdict, finite_or_none)
from dckit.seq_core import ExplicitSequence, WeightSequence, weighted_log_values

if TYPE_CHECKING:
    from dckit.jets import FormalJet

logger = logging.getLogger(__name__)

Schedule = Callable[[int], float]


def default_a(j: int) -> float:
    return float((j + 1) ** 2)


def default_b(j: int) -> float:
    return 1.0 / (j + 1)


@dataclass(frozen=True)
class Minorant:
    """Log-values of a minorant on indices offset..kmax."""

    kind: str
    offset: int
    log_values: Tuple[float, ...]
    hull_vertices: Tuple[int, ...] = ()
    truncation_from: Optional[int] = None

    def values(self):
        return [math.exp(v) for v in self.log_values]

    def report(self, M: WeightSequence) -> MinorantReport:
        return MinorantReport(
            sequence=M.render(), kind=self.kind,
            kmax=self.offset + len(self.log_values) - 1, offset=self.offset,
            log_values=list(self.log_values), hull_vertices=list(self.hull_vertices),
            truncation_sensitive_from=self.truncation_from)


@dataclass(frozen=True)
class PiecewiseAffine:
    """
    phi through the nodes (k, value), k strictly increasing and starting at
    (0, 0); affine between nodes and continued with the last slope.
    """

    nodes: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        ks = [k for k, _ in self.nodes]
        if len(ks) < 2 or ks[0] != 0 or any(b <= a for a, b in zip(ks, ks[1:])):
            raise InvalidParameter("nodes must start at 0 and increase strictly")

    @property
    def xs(self) -> np.ndarray:
        return np.array([k for k, _ in self.nodes], dtype=float)

    @property
    def ys(self) -> np.ndarray:
        return np.array([v for _, v in self.nodes], dtype=float)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.ys) / np.diff(self.xs)

    @property
    def intercepts(self) -> np.ndarray:
        """c_j with phi(k) = c_j + d_j k on segment j."""
        return self.ys[1:] - self.slopes * self.xs[1:]

    def __call__(self, k):
        ks = np.asarray(k, dtype=float)
        xs, ys = self.xs, self.ys
        out = np.where(ks > xs[-1], ys[-1] + self.slopes[-1] * (ks - xs[-1]),
                       np.interp(ks, xs, ys))
        return float(out) if out.ndim == 0 else out

    def is_convex(self, tol: float = 1e-12) -> bool:
        d = self.slopes
        return bool(np.all(np.diff(d) >= -tol * (1.0 + np.abs(d[1:]))))


# Minorants


def increasing_minorant(M: WeightSequence, kmax: int) -> Minorant:
    """m_k = inf{(j! M_j)^(1/j) : k <= j <= kmax}, k = 1..kmax."""
    if kmax < 1:
        raise InvalidParameter("kmax must be at least 1")
    w = weighted_log_values(M, kmax)
    raw = w[1:] / np.arange(1, kmax + 1)
    suffix = np.minimum.accumulate(raw[::-1])[::-1]
    truncated = None
    if kmax >= 2 and raw[-1] < raw[-2]:
        logger.warning("raw sequence still decreasing at kmax=%d; minorant is truncation-sensitive", kmax)
        truncated = kmax
    return Minorant("increasing", 1, tuple(float(v) for v in suffix),
                    truncation_from=truncated)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(ys: np.ndarray) -> list:
    """Indices of the lower convex hull of the points (k, ys[k])."""
    hull = []
    for k, y in enumerate(ys):
        while len(hull) >= 2 and _cross((hull[-2], ys[hull[-2]]), (hull[-1], ys[hull[-1]]), (k, y)) <= 0:
            hull.pop()
        hull.append(k)
    return hull


def log_convex_minorant(M: WeightSequence, kmax: int) -> Minorant:
    """Lower convex envelope of (k, log(k! M_k)), k = 0..kmax."""
    if kmax < 2:
        raise InvalidParameter("kmax must be at least 2")
    w = weighted_log_values(M, kmax)
    hull = lower_hull(w)
    envelope = np.minimum(np.interp(np.arange(kmax + 1), hull, w[hull]), w)
    return Minorant("log_convex", 0, tuple(float(v) for v in envelope),
                    hull_vertices=tuple(hull), truncation_from=hull[-2] + 1)


# Composed weight


def _composition_layers(log_l: np.ndarray, kmax: int) -> Iterator[Tuple[int, np.ndarray]]:
    """
    Yield (j, P_j) where P_j[k] is the max of log(L_a1 ... L_aj) over
    compositions of k into j positive parts (-inf when k < j).
    """
    layer = np.full(kmax + 1, -math.inf)
    layer[1:] = log_l[1:]
    yield 1, layer
    for j in range(2, kmax + 1):
        nxt = np.full(kmax + 1, -math.inf)
        for a in range(1, kmax - j + 2):
            tail = nxt[a + j - 1:]
            np.maximum(tail, log_l[a] + layer[j - 1:kmax - a + 1], out=tail)
        layer = nxt
        yield j, layer


def composed_weight_logs(M: WeightSequence, L: WeightSequence, kmax: int) -> np.ndarray:
    log_m = M.logs(kmax)
    best = np.full(kmax + 1, -math.inf)
    best[0] = log_m[0]
    for j, layer in _composition_layers(L.logs(kmax), kmax):
        np.maximum(best, log_m[j] + layer, out=best)
    return best


def compose_weights(M: WeightSequence, L: WeightSequence, kmax: int) -> ExplicitSequence:
    """(M∘L)_k = max M_j L_a1 ... L_aj over compositions a of k; (M∘L)_0 = M_0."""
    if kmax < 1:
        raise InvalidParameter("kmax must be at least 1")
    return ExplicitSequence.from_logs(composed_weight_logs(M, L, kmax))


def composition_domination(M: WeightSequence, kmax: int) -> Verdict:
    """M_1^j M_k >= M_j M_a1 ... M_aj for every composition a of k into j parts."""
    if kmax < 1:
        raise InvalidParameter("kmax must be at least 1")
    log_m = M.logs(kmax)
    tol = settings.convexity_tol
    worst = math.inf
    for j, layer in _composition_layers(log_m, kmax):
        ks = np.arange(j, kmax + 1)
        gap = j * log_m[1] + log_m[ks] - (log_m[j] + layer[ks])
        bad = np.nonzero(gap < -tol * (1.0 + np.abs(log_m[ks])))[0]
        if bad.size:
            return Verdict(property="composition_domination", status=Status.fails,
                           witness=(j, int(ks[bad[0]])), statistic=float(gap[bad[0]]),
                           kmax=kmax)
        worst = min(worst, float(gap.min()))
    return Verdict(property="composition_domination", status=Status.holds,
                   statistic=finite_or_none(worst), kmax=kmax)


# Majorant


@dataclass(frozen=True)
class Majorant:
    L: ExplicitSequence
    phi: PiecewiseAffine
    report: MajorantReport


def majorant_construction(M: WeightSequence, f: "FormalJet",
                          a_schedule: Schedule = default_a,
                          b_schedule: Schedule = default_b,
                          check_log_convex: bool = True) -> Majorant:
    """
    Build L_k = e^phi(k) M_k so that (|f_k|/(k! L_k))^(1/k) = 1/b_j at the
    selected nodes k_j.

    Node k_j is the first index after k_{j-1} whose ratio
    g_k = (|f_k|/(k! M_k))^(1/k) reaches a_j and whose beta = b_j g_k
    satisfies beta > 1, beta > beta_{j-1} and beta >= beta_{j-1}^(k_{j-1}).
    """
    K = f.order
    w = weighted_log_values(M, K)
    if check_log_convex:
        verdict = is_weakly_log_convex(M, K)
        if verdict.status == Status.fails:
            raise NotWeaklyLogConvex(verdict.witness)
    else:
        logger.warning("weak log-convexity check skipped; only phi and the witness identity are checked")

    logmags = np.asarray(f.logmags, dtype=float)
    nodes = []
    for k in range(1, K + 1):
        if logmags[k] == -math.inf:
            continue
        j = len(nodes)
        a, b = a_schedule(j), b_schedule(j)
        if a <= 0 or b <= 0:
            raise InvalidParameter(f"schedules must be positive, got a_{j}={a}, b_{j}={b}")
        log_g = (logmags[k] - w[k]) / k
        if log_g < math.log(a):
            continue
        log_beta = math.log(b) + log_g
        if log_beta <= 0:
            continue
        if nodes:
            k_prev, lb_prev = nodes[-1][1], nodes[-1][2]
            if log_beta <= lb_prev or log_beta < k_prev * lb_prev:
                continue
        nodes.append((j, k, log_beta, a, b))
    if len(nodes) < 2:
        raise InsufficientData(f"only {len(nodes)} node(s) fit inside the truncation K={K}")

    phi = PiecewiseAffine(((0, 0.0),) + tuple((k, k * lb) for _, k, lb, _, _ in nodes))
    log_l = phi(np.arange(K + 1)) + M.logs(K)
    L = ExplicitSequence.from_logs(log_l)

    diag = []
    for j, k, log_beta, a, b in nodes:
        witness = math.exp((logmags[k] - gammaln(k + 1) - log_l[k]) / k)
        diag.append(MajorantNode(j=j, k=k, beta=math.exp(log_beta) if log_beta < 700 else None,
                                 log_beta=log_beta, a=a, b=b, witness=witness))
    verified = all(abs(n.witness * n.b - 1.0) <= 1e-9 for n in diag)
    if not verified:
        logger.warning("witness identity off by more than 1e-9 at some node")
    logger.info("majorant: %d nodes %s", len(nodes), [n.k for n in diag])
    report = MajorantReport(
        sequence=M.render(), truncation=K, nodes=diag,
        phi_nodes=[(int(k), float(v)) for k, v in phi.nodes],
        slopes=[float(d) for d in phi.slopes], log_values=[float(v) for v in log_l],
        witness_verified=verified, precondition_checked=check_log_convex)
    return Majorant(L, phi, report)
