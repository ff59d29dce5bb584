from fastapi import APIRouter

from dckit.expr import parse_expr
from dckit.jetnorms import Grid, counterexample_54, explaw_verify, seminorm_K_rho
from dckit.schemas import (CounterexampleReport, CounterexampleRequest, ExpLawReport,
                           ExpLawRequest, SeminormReport, SeminormRequest)
from dckit.seq_core import parse_sequence_spec

router = APIRouter(prefix="/norms", tags=["norms"])


@router.post("/seminorm", response_model=SeminormReport)
def seminorm(request: SeminormRequest):
    """Weighted sup of the derivatives of an expression over a grid."""
    grids = [Grid.parse(text) for text in request.grid]
    return seminorm_K_rho(parse_expr(request.expr), grids, parse_sequence_spec(request.seq),
                          request.rho, request.order)


@router.post("/explaw", response_model=ExpLawReport)
def explaw(request: ExpLawRequest):
    """Mixed against joint derivative weights on a product grid."""
    return explaw_verify(parse_expr(request.expr), Grid.parse(request.grid1), Grid.parse(request.grid2),
                         parse_sequence_spec(request.seq), request.sigma,
                         request.rho1, request.rho2, request.order)


@router.post("/counterexample54", response_model=CounterexampleReport)
def counterexample(request: CounterexampleRequest):
    """Divergence table for M_k = q^(k^2)."""
    return counterexample_54(request.q, request.n_max, request.rho1)
