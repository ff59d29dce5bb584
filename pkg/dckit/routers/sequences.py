from fastapi import APIRouter

from dckit.analysis import convention_report, inclusion_relation
from dckit.constructions import compose_weights, increasing_minorant, log_convex_minorant
from dckit.schemas import (ClassificationReport, ComposedWeightReport, CompareRequest,
                           ComposeWeightsRequest, InclusionReport, MinorantReport,
                           MinorantRequest, SequenceRequest)
from dckit.seq_core import parse_sequence_spec

router = APIRouter(prefix="/sequences", tags=["sequences"])


def _kmax(M, kmax: int) -> int:
    hint = M.kmax_hint
    return kmax if hint is None else min(kmax, hint)


@router.post("/classify", response_model=ClassificationReport)
def classify_sequence(request: SequenceRequest):
    """Standing conditions and quasianalyticity of one weight sequence."""
    M = parse_sequence_spec(request.seq)
    return convention_report(M, _kmax(M, request.kmax))


@router.post("/compare", response_model=InclusionReport)
def compare_sequences(request: CompareRequest):
    """Inclusion relations between the classes of two sequences."""
    M = parse_sequence_spec(request.m)
    N = parse_sequence_spec(request.n)
    return inclusion_relation(M, N, _kmax(N, _kmax(M, request.kmax)))


@router.post("/minorant", response_model=MinorantReport)
def build_minorant(request: MinorantRequest):
    """Largest increasing or log-convex minorant."""
    M = parse_sequence_spec(request.seq)
    build = increasing_minorant if request.kind == "increasing" else log_convex_minorant
    return build(M, _kmax(M, request.kmax)).report(M)


@router.post("/compose", response_model=ComposedWeightReport)
def compose_sequences(request: ComposeWeightsRequest):
    """Composed weight (M o L)."""
    M = parse_sequence_spec(request.m)
    L = parse_sequence_spec(request.l)
    kmax = _kmax(L, _kmax(M, request.kmax))
    composed = compose_weights(M, L, kmax)
    return ComposedWeightReport(m=M.render(), l=L.render(), kmax=kmax,
                                log_values=list(composed.log_values))
