import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from dckit.config import settings


def finite_or_none(x) -> Optional[float]:
    """Reports carry no infinities; callers flag them separately."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def exp_or_none(log_x: float) -> Optional[float]:
    """exp of a log-domain value; 0.0 for -inf, None when it overflows."""
    if log_x == -math.inf:
        return 0.0
    try:
        return finite_or_none(math.exp(log_x))
    except OverflowError:
        return None


# Verdict schemas


class Status(str, Enum):
    holds = "Holds"
    fails = "Fails"
    inconclusive = "Inconclusive"


Witness = Union[int, Tuple[int, int], None]


class Verdict(BaseModel):
    property: str
    status: Status
    witness: Witness = None
    statistic: Optional[float] = None
    log_statistic: Optional[float] = None
    kmax: int
    params: Dict[str, Any] = {}
    note: Optional[str] = None

    @model_validator(mode="after")
    def fails_needs_witness(self):
        if self.status == Status.fails and self.witness is None:
            raise ValueError(f"{self.property}: Fails requires a witness")
        return self


def combine_status(*statuses: Status) -> Status:
    """Fails beats Inconclusive beats Holds."""
    if Status.fails in statuses:
        return Status.fails
    if Status.inconclusive in statuses:
        return Status.inconclusive
    return Status.holds


# Sequence analysis schemas


class QuasianalyticityReport(BaseModel):
    criterion: int
    partial_sums: List[Tuple[int, float]]
    tail_exponent: float
    verdict: Verdict


class InclusionReport(BaseModel):
    m: str
    n: str
    kmax: int
    ratio_root_sup: Optional[float]
    log_ratio_root_sup: float
    beurling_inclusion: Verdict
    roumieu_inclusion: Verdict
    roumieu_into_beurling: Verdict

    @property
    def status(self) -> Status:
        return combine_status(
            self.beurling_inclusion.status,
            self.roumieu_inclusion.status,
            self.roumieu_into_beurling.status)


class ClassificationReport(BaseModel):
    sequence: str
    kmax: int
    normalized: Verdict
    log_convex: Verdict
    weakly_log_convex: Verdict
    derivation_closed: Verdict
    moderate_growth: Verdict
    ratio_to_infinity: Verdict
    root_to_infinity: Verdict
    quasianalytic: List[QuasianalyticityReport]
    shift_comparison: Optional[InclusionReport] = None
    thresholds: Dict[str, float] = {}

    @property
    def status(self) -> Status:
        """Standing conditions only; quasianalyticity is reported, not required."""
        return combine_status(
            self.normalized.status, self.log_convex.status, self.weakly_log_convex.status,
            self.derivation_closed.status, self.moderate_growth.status,
            self.ratio_to_infinity.status, self.root_to_infinity.status)


# Construction schemas


class MinorantReport(BaseModel):
    sequence: str
    kind: str
    kmax: int
    offset: int
    log_values: List[float]
    hull_vertices: List[int] = []
    truncation_sensitive_from: Optional[int] = None
    thresholds: Dict[str, float] = Field(default_factory=lambda: settings.thresholds())


class ComposedWeightReport(BaseModel):
    m: str
    l: str
    kmax: int
    log_values: List[float]
    thresholds: Dict[str, float] = Field(default_factory=lambda: settings.thresholds())


class MajorantNode(BaseModel):
    j: int
    k: int
    beta: Optional[float]
    log_beta: float
    a: float
    b: float
    witness: float


class MajorantReport(BaseModel):
    sequence: str
    truncation: int
    nodes: List[MajorantNode]
    phi_nodes: List[Tuple[int, float]]
    slopes: List[float]
    log_values: List[float]
    witness_verified: bool
    precondition_checked: bool


# Jet schemas


class JetCoefficient(BaseModel):
    k: int
    sign: int
    logmag: Optional[float]


class JetReport(BaseModel):
    order: int
    coefficients: List[JetCoefficient]
    cancelled_orders: List[int] = []
    thresholds: Dict[str, float] = Field(default_factory=lambda: settings.thresholds())


class MembershipReport(BaseModel):
    sequence: str
    order: int
    rho_star: Optional[float]
    roumieu: Verdict
    beurling: Verdict
    thresholds: Dict[str, float] = Field(default_factory=lambda: settings.thresholds())


class CompositionBoundReport(BaseModel):
    order: int
    rho_f: float
    c_f: float
    rho_g: float
    c_g: float
    min_log_slack: float
    violations: List[int]
    verdict: Verdict


class RadiusReport(BaseModel):
    variant: str
    delta: float
    submultiplicative: bool
    decay_class: Optional[str]
    radius_estimate: Optional[float]
    radius_infinite: bool
    verdict: Verdict


# Norm schemas


class SeminormRow(BaseModel):
    n: int
    lower: float
    upper: float


class SeminormReport(BaseModel):
    expr: str
    grid: List[str] = []
    sequence: Optional[str] = None
    dimension: int
    rho: float
    order: int
    lower: float
    upper: float
    argmax_point: List[float]
    argmax_order: int
    rows: List[SeminormRow]
    general_norm: Optional[float] = None
    params: Dict[str, Any] = {}
    thresholds: Dict[str, float] = Field(default_factory=lambda: settings.thresholds())


class RemainderRow(BaseModel):
    n: int
    k: int
    remainder: float
    norm_lower: float
    norm_upper: float
    weighted_remainder: Optional[float] = None
    weighted_norm: Optional[float] = None
    witness: Optional[Tuple[List[float], List[float]]] = None
    sound: bool


class RemainderBoundReport(BaseModel):
    expr: str
    order: int
    max_violation: float
    rows: List[RemainderRow]
    verdict: Verdict


class WhitneyReport(BaseModel):
    expr: str
    n: int
    k: int
    value: float
    witness: Optional[Tuple[List[float], List[float]]] = None
    bound: RemainderBoundReport


class ExpLawReport(BaseModel):
    expr: str
    sequence: str
    order: int
    sigma: float
    sigma_estimate: float
    rho: float
    sup_mixed: float
    sup_joint_sigma: float
    sup_joint_rho: float
    sup_joint: float
    min_slack_upper: float
    min_slack_lower: float
    violations_upper: int
    violations_lower: int
    verdict: Verdict


class CounterexampleRow(BaseModel):
    n: int
    valid: bool
    log_term: float
    log_lower_bound: float
    lower_bound: Optional[float]


class SeriesCheck(BaseModel):
    rho: float
    partial_sums: List[float]
    stabilized: bool


class CounterexampleReport(BaseModel):
    q: float
    rho1: float
    n_max: int
    rows: List[CounterexampleRow]
    strictly_increasing: bool
    series: List[SeriesCheck]
    verdict: Verdict


class DivergenceRow(BaseModel):
    k: int
    log_value: float
    value: Optional[float]


class DivergenceReport(BaseModel):
    sequence: str
    rho: float
    rows: List[DivergenceRow]
    verdict: Verdict


class CookbookSummary(BaseModel):
    section: str
    passed: bool
    directory: Optional[str] = None
    checks: Dict[str, bool] = {}


# Request schemas (HTTP surface)


class SequenceRequest(BaseModel):
    seq: str
    kmax: int = Field(default=256, ge=8, le=4096)


class CompareRequest(BaseModel):
    m: str
    n: str
    kmax: int = Field(default=256, ge=8, le=4096)


class MinorantRequest(BaseModel):
    seq: str
    kind: str = Field(default="log_convex", pattern="^(increasing|log_convex)$")
    kmax: int = Field(default=256, ge=2, le=4096)


class ComposeWeightsRequest(BaseModel):
    m: str
    l: str
    kmax: int = Field(default=64, ge=1, le=512)


class JetRequest(BaseModel):
    values: List[float] = Field(min_length=1)
    seq: str = "const:1"


class JetComposeRequest(BaseModel):
    f: List[float] = Field(min_length=1)
    g: List[float] = Field(min_length=1)


class RadiusRequest(BaseModel):
    values: List[float] = Field(min_length=1)
    r: str
    delta: float = Field(gt=0)
    variant: str = Field(default="beurling", pattern="^(beurling|roumieu)$")


class SeminormRequest(BaseModel):
    expr: str
    grid: List[str] = Field(min_length=1, max_length=2)
    seq: str = "const:1"
    rho: float = Field(default=1.0, gt=0)
    order: int = Field(default=12, ge=0, le=30)


class ExpLawRequest(BaseModel):
    expr: str
    grid1: str
    grid2: str
    seq: str = "const:1"
    sigma: float = Field(gt=0)
    rho1: float = Field(default=1.0, gt=0)
    rho2: float = Field(default=1.0, gt=0)
    order: int = Field(default=8, ge=0, le=30)


class CounterexampleRequest(BaseModel):
    q: float = Field(default=2.0, gt=1)
    n_max: int = Field(default=8, ge=1, le=512)
    rho1: float = Field(default=1.0, gt=0)
