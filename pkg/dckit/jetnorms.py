"""
Seminorms of concrete functions of one or two variables.

Derivatives come from truncated Taylor arithmetic on the expression, so
they are exact up to rounding.  In two variables the operator norm of the
n-th derivative is bracketed: the sup of |d_v^n f| over sampled unit
directions v from below and, from above, the smaller of the Frobenius
norm and the polarization factor (2e)^n times a certified diagonal sup.
Inequality checks compare a lower bound on the large side with an upper
bound on the small side.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb, gammaln

from dckit.analysis import divergence_verdict, is_weakly_log_convex, moderate_growth_sup
from dckit.config import settings
from dckit.errors import (DomainError, InvalidParameter, OrderInsufficient,
                          OrderTooLarge, ParseError, PreconditionFailed)
from dckit.expr import Expr, render, variables
from dckit.jets import TestSequence
from dckit.schemas import (CounterexampleReport, CounterexampleRow, DivergenceReport,
                           DivergenceRow, ExpLawReport, RemainderBoundReport,
                           RemainderRow, SeminormReport, SeminormRow, SeriesCheck,
                           Status, Verdict, WhitneyReport, finite_or_none)
from dckit.seq_core import QPowerSequence, WeightSequence, weighted_log_values
from dckit.taylor import Taylor, expand

logger = logging.getLogger(__name__)

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class Grid:
    """n uniform points on [a, b]."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise InvalidParameter(f"grid needs a < b, got [{self.a}, {self.b}]")
        if not 2 <= self.n <= settings.max_grid:
            raise InvalidParameter(f"grid size must be in 2..{settings.max_grid}, got {self.n}")

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ParseError(text, 0, "a,b,n")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ParseError(text, 0, "a,b,n with numbers a, b and an integer n")
        return cls(a, b, n)

    def points(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.n)

    def render(self) -> str:
        return f"{self.a!r},{self.b!r},{self.n}"


def _check_order(N: int) -> None:
    if N < 0:
        raise InvalidParameter(f"order must be nonnegative, got {N}")
    if N > settings.max_order:
        raise OrderTooLarge(N, settings.max_order)


def _check_variables(e: Expr, dim: int) -> None:
    unbound = variables(e) - set(("x", "y")[:dim])
    if unbound:
        raise InvalidParameter(
            f"expression uses {', '.join(sorted(unbound))} but the domain is {dim}-dimensional")


def _finite(values: np.ndarray, where) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise DomainError(f"derivatives are not finite at {where}")
    return values


# Derivatives


def taylor_jet(e: Expr, x, v, N: int) -> List[float]:
    """d_v^k f(x) for k = 0..N, from the series of t -> f(x + t v)."""
    _check_order(N)
    point = np.atleast_1d(np.asarray(x, dtype=float))
    direction = np.atleast_1d(np.asarray(v, dtype=float))
    if point.size not in (1, 2) or direction.size != point.size:
        raise InvalidParameter("point and direction must both have 1 or 2 coordinates")
    _check_variables(e, point.size)
    seeds = {name: Taylor.seed(point[i], [direction[i]], N)
             for i, name in enumerate(("x", "y")[:point.size])}
    series = expand(e, seeds)
    return [float(d) for d in _finite(series.derivatives(), point.tolist())]


def mixed_partials(e: Expr, point, N: int) -> np.ndarray:
    """P[k1, k2] = d_x^k1 d_y^k2 f(point), zero where k1 + k2 > N."""
    _check_order(N)
    x0, y0 = (float(c) for c in point)
    _check_variables(e, 2)
    seeds = {"x": Taylor.seed(x0, [1.0, 0.0], N), "y": Taylor.seed(y0, [0.0, 1.0], N)}
    return _finite(expand(e, seeds).derivatives(), [x0, y0])


def finite_difference_check(e: Expr, x, v, N: int, h: Optional[float] = None) -> float:
    """
    Max relative error between d_v^k f(x), k = 1..N, and the Richardson
    extrapolated central difference of d_v^(k-1) f.
    """
    h = settings.fd_step if h is None else h
    point = np.atleast_1d(np.asarray(x, dtype=float))
    direction = np.atleast_1d(np.asarray(v, dtype=float))
    exact = taylor_jet(e, point, direction, N)

    def central(step):
        plus = taylor_jet(e, point + step * direction, direction, N - 1)
        minus = taylor_jet(e, point - step * direction, direction, N - 1)
        return (np.asarray(plus) - np.asarray(minus)) / (2.0 * step)

    extrapolated = (4.0 * central(h / 2.0) - central(h)) / 3.0
    worst = 0.0
    for k in range(1, N + 1):
        err = abs(extrapolated[k - 1] - exact[k]) / max(abs(exact[k]), 1.0)
        worst = max(worst, err)
    return worst


# Sampling


@dataclass(frozen=True, eq=False)
class SampledJet:
    """
    Derivatives on a grid: derivs[p, k] = f^(k)(x_p) in one variable,
    derivs[p, k1, k2] = d_x^k1 d_y^k2 f(x_p) in two.
    """

    expr: str
    grids: Tuple[Grid, ...]
    points: np.ndarray
    order: int
    derivs: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.grids)

    def directional(self, v: np.ndarray, m: int, at: Optional[int] = None) -> np.ndarray:
        """
        d_v^m f for unit vectors v of shape (P, 2) or (1, 2) in two variables;
        at every point, or at the single point ``at`` for each row of v.
        """
        if self.dimension == 1:
            raise InvalidParameter("directional derivatives need two variables")
        v = np.atleast_2d(v)
        i = np.arange(m + 1)
        weights = comb(m, i) * v[:, :1] ** i * v[:, 1:2] ** (m - i)
        partials = self.derivs[:, i, m - i] if at is None else self.derivs[at, i, m - i]
        return np.sum(weights * partials, axis=-1)

    def diagonal_sup(self, n: int) -> np.ndarray:
        """Per point, the sup of |d_v^n f| over the sampled unit directions."""
        if self.dimension == 1:
            return np.abs(self.derivs[:, n])
        theta = np.pi * np.arange(settings.directions) / settings.directions
        best = np.zeros(len(self.points))
        for t in theta:
            v = np.array([[math.cos(t), math.sin(t)]])
            best = np.maximum(best, np.abs(self.directional(v, n)))
        return best

    def norm_upper(self, n: int) -> np.ndarray:
        """
        Per point, an upper bound on the operator norm of the n-th derivative.

        In two variables this is the smaller of the Frobenius norm of the
        symmetric tensor and the polarization bound applied to a certified
        diagonal sup.  d_v^n f is a trigonometric polynomial of degree n in
        the angle of v, so Bernstein's inequality lifts the sampled sup by
        1/(1 - n pi/(2D)) while n pi/(2D) < 1, with D sampled directions.
        """
        if self.dimension == 1:
            return np.abs(self.derivs[:, n])
        i = np.arange(n + 1)
        sampled = self.diagonal_sup(n)
        upper = np.sqrt(np.sum(comb(n, i) * self.derivs[:, i, n - i] ** 2, axis=-1))
        reach = n * math.pi / (2.0 * settings.directions)
        if reach < 1.0:
            _, polarized = polarization_bracket(sampled / (1.0 - reach), n)
            upper = np.minimum(upper, polarized)
        return np.maximum(upper, sampled)


def sample_jet(e: Expr, grids: Sequence[Grid], N: int) -> SampledJet:
    _check_order(N)
    grids = tuple(grids)
    if len(grids) not in (1, 2):
        raise InvalidParameter("only one- and two-dimensional grids")
    _check_variables(e, len(grids))
    if len(grids) == 1:
        points = grids[0].points()[:, None]
        job = lambda p: np.asarray(taylor_jet(e, p[0], 1.0, N))
    else:
        gx, gy = np.meshgrid(grids[0].points(), grids[1].points(), indexing="ij")
        points = np.column_stack([gx.ravel(), gy.ravel()])
        job = lambda p: mixed_partials(e, p, N)
    with ThreadPoolExecutor(max_workers=settings.worker_count) as pool:
        derivs = np.stack(list(pool.map(job, points)))
    logger.debug("sampled %d points up to order %d", len(points), N)
    return SampledJet(render(e), grids, points, N, derivs)


# Seminorms


def polarization_bracket(diag_sup: float, k: int) -> Tuple[float, float]:
    """
    sup of the diagonal <= norm of a symmetric k-linear map <= (2e)^k sup.

    Works elementwise on arrays of per-point sups.
    """
    if np.any(np.asarray(diag_sup) < 0):
        raise InvalidParameter("diagonal sup must be nonnegative")
    if k < 0:
        raise InvalidParameter("k must be nonnegative")
    return diag_sup, diag_sup * (2.0 * math.e) ** k


def _scaled(value: float, log_weight: float) -> float:
    if value == 0:
        return 0.0
    out = math.exp(math.log(value) - log_weight)
    if not math.isfinite(out):
        raise DomainError("weighted derivative overflows")
    return out


def _log_weights(M: WeightSequence, extra: np.ndarray, N: int) -> np.ndarray:
    """log(n! r_n M_n) for n = 0..N, with log r_n given by ``extra``."""
    return gammaln(np.arange(N + 1) + 1) + extra + M.logs(N)


def seminorm_from_samples(sj: SampledJet, M: WeightSequence, rho: float) -> SeminormReport:
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidParameter(f"rho must be positive, got {rho}")
    N = sj.order
    logw = _log_weights(M, np.arange(N + 1) * math.log(rho), N)
    rows = []
    best, arg_point, arg_order = -1.0, 0, 0
    for n in range(N + 1):
        diag = sj.diagonal_sup(n)
        p = int(np.argmax(diag))
        lower = _scaled(float(diag[p]), float(logw[n]))
        upper = _scaled(float(sj.norm_upper(n).max()), float(logw[n]))
        rows.append(SeminormRow(n=n, lower=lower, upper=upper))
        if lower > best:
            best, arg_point, arg_order = lower, p, n
    return SeminormReport(
        expr=sj.expr, grid=[g.render() for g in sj.grids], sequence=M.render(),
        dimension=sj.dimension, rho=rho, order=N,
        lower=max(r.lower for r in rows), upper=max(r.upper for r in rows),
        argmax_point=[float(c) for c in sj.points[arg_point]], argmax_order=arg_order,
        rows=rows, params={"directions": settings.directions} if sj.dimension == 2 else {})


def seminorm_K_rho(e: Expr, grids: Sequence[Grid], M: WeightSequence, rho: float,
                   N: int) -> SeminormReport:
    """sup over grid points and n <= N of |f^(n)(x)| / (n! rho^n M_n)."""
    return seminorm_from_samples(sample_jet(e, grids, N), M, rho)


# Whitney remainders


def _remainder_1d(sj: SampledJet, n: int, k: int):
    xs = sj.points[:, 0]
    D = sj.derivs
    diff = xs[:, None] - xs[None, :]
    terms = [D[None, :, j + k] * diff ** j / math.factorial(j) for j in range(n + 1)]
    R = D[:, None, k] - sum(terms)
    scale = np.abs(D[:, None, k]) + sum(np.abs(t) for t in terms)
    return np.abs(diff), R, scale


def _remainder_2d(sj: SampledJet, n: int, k: int):
    P = len(sj.points)
    dist = np.zeros((P, P))
    R = np.zeros((P, P))
    scale = np.zeros((P, P))
    for q in range(P):
        delta = sj.points - sj.points[q]
        r = np.hypot(delta[:, 0], delta[:, 1])
        v = delta / np.where(r > 0, r, 1.0)[:, None]
        at_x = sj.directional(v, k)
        terms = [sj.directional(v, j + k, at=q) * r ** j / math.factorial(j) for j in range(n + 1)]
        dist[:, q] = r
        R[:, q] = at_x - sum(terms)
        scale[:, q] = np.abs(at_x) + sum(np.abs(t) for t in terms)
    return dist, R, scale


def _remainder_scan(sj: SampledJet, n: int, k: int):
    """
    (n+1)! |R_y^n f^(k)(x)| / |x - y|^(n+1) over ordered pairs x != y: the
    max, its pair, and the max after removing a rounding allowance.
    """
    if n < 0 or k < 0:
        raise InvalidParameter("n and k must be nonnegative")
    if sj.order < n + k:
        raise OrderInsufficient(f"remainder of order {n} for k={k} needs order {n + k}, have {sj.order}")
    if len(sj.points) < 2:
        raise InvalidParameter("remainders need at least two points")
    dist, R, scale = (_remainder_1d if sj.dimension == 1 else _remainder_2d)(sj, n, k)
    off = dist > 0
    factor = np.zeros_like(dist)
    factor[off] = math.factorial(n + 1) / dist[off] ** (n + 1)
    value = np.abs(R) * factor
    noise = 64.0 * _EPS * scale * factor
    i, j = np.unravel_index(int(np.argmax(value)), value.shape)
    witness = ([float(c) for c in sj.points[i]], [float(c) for c in sj.points[j]])
    certain = float(np.max(np.maximum(value - noise, 0.0)))
    return float(value[i, j]), witness, certain


def whitney_remainder_seminorm(sj: SampledJet, n: int, k: int) -> float:
    """|||f|||_{n,k} on the grid; exact in one variable, a lower bound in two."""
    return _remainder_scan(sj, n, k)[0]


def verify_taylor_remainder_bound(sj: SampledJet, M: WeightSequence, rho: float,
                                  N: Optional[int] = None) -> RemainderBoundReport:
    """|||f|||_{n,k} <= sup |f^(n+k+1)| for all n + k + 1 <= N."""
    N = sj.order if N is None else N
    if N > sj.order:
        raise OrderInsufficient(f"bound up to order {N} needs samples of order {N}, have {sj.order}")
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidParameter(f"rho must be positive, got {rho}")
    tol = settings.remainder_tol
    logw = _log_weights(M, np.arange(N + 1) * math.log(rho), N)
    norms = [float(sj.diagonal_sup(m).max()) for m in range(N + 1)]
    rows, worst, first_bad = [], 0.0, None
    for m in range(1, N + 1):
        norm_upper = float(sj.norm_upper(m).max())
        for k in range(m):
            n = m - 1 - k
            value, witness, certain = _remainder_scan(sj, n, k)
            excess = certain - norm_upper * (1.0 + tol)
            sound = excess <= 0
            if not sound:
                worst = max(worst, excess)
                first_bad = first_bad or (n, k)
            rows.append(RemainderRow(
                n=n, k=k, remainder=value, norm_lower=norms[m], norm_upper=norm_upper,
                weighted_remainder=_scaled(value, float(logw[m])),
                weighted_norm=_scaled(norms[m], float(logw[m])),
                witness=witness, sound=sound))
    params = {"remainder_tol": tol, "rho": rho}
    if first_bad:
        verdict = Verdict(property="taylor_remainder_bound", status=Status.fails,
                          witness=first_bad, statistic=worst, kmax=N, params=params)
    else:
        verdict = Verdict(property="taylor_remainder_bound", status=Status.holds,
                          statistic=0.0, kmax=N, params=params)
    return RemainderBoundReport(expr=sj.expr, order=N, max_violation=worst, rows=rows,
                                verdict=verdict)


def whitney_report(sj: SampledJet, n: int, k: int, M: WeightSequence, rho: float) -> WhitneyReport:
    value, witness, _ = _remainder_scan(sj, n, k)
    return WhitneyReport(expr=sj.expr, n=n, k=k, value=value, witness=witness,
                         bound=verify_taylor_remainder_bound(sj, M, rho))


def general_weight_norm(sj: SampledJet, M: WeightSequence, r: TestSequence,
                        N: Optional[int] = None) -> float:
    """
    max(sup_m ||f||_m / (m! r_m M_m), sup_{n,k} |||f|||_{n,k} / ((n+k+1)! r_{n+k+1} M_{n+k+1}))
    with m and n + k + 1 up to N.
    """
    N = sj.order if N is None else N
    if N > sj.order or N > r.kmax:
        raise OrderInsufficient(f"order {N} exceeds the samples ({sj.order}) or r ({r.kmax})")
    logw = _log_weights(M, r.r.logs(N), N)
    best = max(_scaled(float(sj.diagonal_sup(m).max()), float(logw[m])) for m in range(N + 1))
    for m in range(1, N + 1):
        for k in range(m):
            best = max(best, _scaled(whitney_remainder_seminorm(sj, m - 1 - k, k), float(logw[m])))
    return best


# Exponential law


def explaw_verify(e2: Expr, K1: Grid, K2: Grid, M: WeightSequence, sigma: float,
                  rho1: float, rho2: float, N: int) -> ExpLawReport:
    """
    Compare, for k1 + k2 <= N, the quotient weighted by k1! k2! M_k1 M_k2
    with the one weighted by (k1+k2)! M_(k1+k2):

      mixed <= (2 sigma)^(k1+k2) joint   (moderate growth, binomial bound)
      mixed >= joint                     (k1! k2! M_k1 M_k2 <= (k1+k2)! M_(k1+k2))
    """
    for name, x in (("sigma", sigma), ("rho1", rho1), ("rho2", rho2)):
        if not (math.isfinite(x) and x > 0):
            raise InvalidParameter(f"{name} must be positive, got {x}")
    kmax = max(N, 2)
    if abs(M.log_at(0)) > settings.convexity_tol:
        raise PreconditionFailed(f"M_0 = {math.exp(M.log_at(0))!r}, need M_0 = 1")
    convex = is_weakly_log_convex(M, kmax)
    if convex.status == Status.fails:
        raise PreconditionFailed(f"M is not weakly log-convex at k={convex.witness}")
    sigma_estimate, _ = moderate_growth_sup(M, kmax)
    if sigma_estimate is None or sigma_estimate > sigma * (1.0 + settings.bound_tol):
        raise PreconditionFailed(
            f"sigma={sigma!r} does not certify moderate growth (estimate {sigma_estimate!r})")

    sj = sample_jet(e2, (K1, K2), N)
    rho = min(rho1, rho2) / (2.0 * sigma)
    w = weighted_log_values(M, N)
    l = M.logs(N)
    tol = settings.convexity_tol
    sups = dict(mixed=0.0, joint_sigma=0.0, joint_rho=0.0, joint=0.0)
    slack_up, slack_low = math.inf, math.inf
    bad_up, bad_low, first_bad = 0, 0, None
    for n in range(N + 1):
        for k1 in range(n + 1):
            k2 = n - k1
            top = float(np.max(np.abs(sj.derivs[:, k1, k2])))
            if top == 0:
                continue
            lw_mixed = w[k1] + w[k2] + k1 * math.log(rho1) + k2 * math.log(rho2)
            lw_joint = w[n] + k1 * math.log(rho1) + k2 * math.log(rho2)
            s_up = n * math.log(2.0 * sigma) + lw_mixed - lw_joint
            s_low = w[n] - w[k1] - w[k2]
            limit = tol * (1.0 + abs(w[n]))
            if s_up < -limit:
                bad_up += 1
                first_bad = first_bad or (k1, k2)
            if s_low < -limit:
                bad_low += 1
                first_bad = first_bad or (k1, k2)
            slack_up, slack_low = min(slack_up, s_up), min(slack_low, s_low)
            sups["mixed"] = max(sups["mixed"], _scaled(top, lw_mixed))
            sups["joint_sigma"] = max(sups["joint_sigma"], _scaled(top, lw_joint - n * math.log(2.0 * sigma)))
            sups["joint"] = max(sups["joint"], _scaled(top, lw_joint))
            sups["joint_rho"] = max(sups["joint_rho"], _scaled(top, w[n] + n * math.log(rho)))
    params = {"convexity_tol": tol, "rho1": rho1, "rho2": rho2}
    if first_bad:
        verdict = Verdict(property="exponential_law", status=Status.fails, witness=first_bad,
                          kmax=N, params=params)
    else:
        verdict = Verdict(property="exponential_law", status=Status.holds, kmax=N, params=params)
    return ExpLawReport(
        expr=sj.expr, sequence=M.render(), order=N, sigma=sigma,
        sigma_estimate=sigma_estimate, rho=rho,
        sup_mixed=sups["mixed"], sup_joint_sigma=sups["joint_sigma"],
        sup_joint_rho=sups["joint_rho"], sup_joint=sups["joint"],
        min_slack_upper=slack_up if math.isfinite(slack_up) else 0.0,
        min_slack_lower=slack_low if math.isfinite(slack_low) else 0.0,
        violations_upper=bad_up, violations_lower=bad_low, verdict=verdict)


# Divergence tables


def _partial_sums(rho: float, terms: int) -> SeriesCheck:
    ns = np.arange(1, terms + 1)
    sums = np.cumsum(np.exp(ns * (math.log(rho) - np.log(ns))))
    quarter = sums[(3 * terms) // 4 - 1]
    stabilized = bool(sums[-1] - quarter <= 1e-9 * sums[-1])
    return SeriesCheck(rho=rho, partial_sums=[float(s) for s in sums], stabilized=stabilized)


def counterexample_54(q: float, n_max: int, rho1: float,
                      rhos: Sequence[float] = (1.0, 2.0, 4.0), terms: int = 32) -> CounterexampleReport:
    """
    Lower bounds for the norm of the evaluation functional built from
    M_k = q^(k^2) and the witness jet d^(j,k) f(0,0) = (j+k)! M_(j+k), with
    j_n = k_n = n.  Row n is valid when q^n >= n; its lower bound is
    n^(j_n + k_n) / (rho1^(k_n) n^(j_n)).
    """
    if not (math.isfinite(q) and q > 1):
        raise InvalidParameter(f"q must exceed 1, got {q}")
    if not (math.isfinite(rho1) and rho1 > 0):
        raise InvalidParameter(f"rho1 must be positive, got {rho1}")
    if n_max < 1:
        raise InvalidParameter("n_max must be at least 1")
    w = weighted_log_values(QPowerSequence(q), 2 * n_max)
    rows = []
    for n in range(1, n_max + 1):
        valid = n * math.log(q) >= math.log(n)
        log_term = float(w[2 * n] - n * math.log(rho1) - 2 * w[n] - n * math.log(n))
        log_bound = n * math.log(n) - n * math.log(rho1)
        rows.append(CounterexampleRow(n=n, valid=valid, log_term=log_term,
                                      log_lower_bound=log_bound,
                                      lower_bound=math.exp(log_bound) if log_bound < 709 else None))

    valid_rows = [r for r in rows if r.valid]
    increasing = all(b.log_term > a.log_term for a, b in zip(valid_rows, valid_rows[1:]))
    below = [r.n for r in valid_rows if r.log_term < r.log_lower_bound - 1e-12 * (1 + abs(r.log_lower_bound))]
    series = [_partial_sums(rho, terms) for rho in rhos]
    params = {"q": q, "rho1": rho1}
    if below or not increasing:
        witness = below[0] if below else next(
            b.n for a, b in zip(valid_rows, valid_rows[1:]) if b.log_term <= a.log_term)
        verdict = Verdict(property="evaluation_unbounded", status=Status.fails,
                          witness=witness, kmax=n_max, params=params)
    elif len(valid_rows) < len(rows) or not all(s.stabilized for s in series):
        verdict = Verdict(property="evaluation_unbounded", status=Status.inconclusive,
                          kmax=n_max, params=params,
                          note="some rows fall outside q^n >= n or a series did not stabilize")
    else:
        verdict = Verdict(property="evaluation_unbounded", status=Status.holds,
                          statistic=rows[-1].log_term, kmax=n_max, params=params)
    return CounterexampleReport(q=q, rho1=rho1, n_max=n_max, rows=rows,
                                strictly_increasing=increasing, series=series, verdict=verdict)


def evaluation_divergence(M: WeightSequence, rho: float, kmax: int) -> DivergenceReport:
    """
    Rows (2 rho)^k |f^(k)(0)| / (k! rho^k M_k) = 2^k for f_k = k! M_k and
    g(s, t) = f(st); the verdict is the divergence test on the rows.
    """
    if not (math.isfinite(rho) and rho > 0):
        raise InvalidParameter(f"rho must be positive, got {rho}")
    if kmax < 8:
        raise InvalidParameter("kmax must be at least 8")
    ks = np.arange(kmax + 1)
    w = weighted_log_values(M, kmax)
    logs = ks * math.log(2.0 * rho) + w - (w + ks * math.log(rho))
    rows = [DivergenceRow(k=int(k), log_value=float(v), value=finite_or_none(math.exp(v)) if v < 709 else None)
            for k, v in zip(ks, logs)]
    verdict = divergence_verdict("evaluation_divergence", ks, logs, kmax, {"rho": rho})
    return DivergenceReport(sequence=M.render(), rho=rho, rows=rows, verdict=verdict)
