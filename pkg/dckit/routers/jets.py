from fastapi import APIRouter

from dckit.jets import FormalJet, TestSequence, classify_membership, compose_jets, radius_test
from dckit.schemas import (JetComposeRequest, JetReport, JetRequest, MembershipReport,
                           RadiusReport, RadiusRequest)
from dckit.seq_core import parse_sequence_spec

router = APIRouter(prefix="/jets", tags=["jets"])


@router.post("/classify", response_model=MembershipReport)
def classify_jet(request: JetRequest):
    """Roumieu and Beurling membership of a derivative jet."""
    f = FormalJet.from_values(request.values)
    return classify_membership(f, parse_sequence_spec(request.seq))


@router.post("/compose", response_model=JetReport)
def compose(request: JetComposeRequest):
    """Derivatives of f o g at 0; g must vanish at 0."""
    return compose_jets(FormalJet.from_values(request.f), FormalJet.from_values(request.g)).report()


@router.post("/radius", response_model=RadiusReport)
def radius(request: RadiusRequest):
    """Boundedness of a coefficient sequence against a test sequence."""
    r = TestSequence.build(parse_sequence_spec(request.r), len(request.values) - 1)
    return radius_test(FormalJet.from_values(request.values), r, request.delta, request.variant)
