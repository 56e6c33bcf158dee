"""Service handlers: the single implementation behind the HTTP app and the CLI.

Each handler takes a request model and returns a response model; both
clients serialize the same payloads, so outputs are identical regardless
of the entry point.
"""

import math

import numpy as np

from ..dissipativity import Polytope, RnnModel, certify, simulate
from ..hyperplane import RawProblem, find_local_maxima
from ..oracle import grid_local_maxima
from ..transfer import GridSpec, check_assumptions, make_builtin
from .schemas import (
    CertifyRequest,
    CertifyResponse,
    CheckTransferRequest,
    CheckTransferResponse,
    CriticalPointModel,
    OracleCompareRequest,
    OracleCompareResponse,
    PolytopeModel,
    ProblemRequest,
    SimulateRequest,
    SimulateResponse,
    SolveResponse,
    WitnessModel,
)

DEFAULT_ORACLE_RADIUS = {"tanh": 6.0, "arctan": 20.0}


def _to_problem(req: ProblemRequest) -> RawProblem:
    return RawProblem(c=req.c, l=req.l, b=req.b, tf=make_builtin(req.transfer))


def _point_model(cp) -> CriticalPointModel:
    return CriticalPointModel(
        beta=cp.beta,
        x=[float(v) for v in cp.x],
        orthant=cp.orthant,
        boundary_flag=cp.is_boundary_degenerate,
        classification=cp.spectral.verdict,
    )


def solve(req: ProblemRequest) -> SolveResponse:
    report = find_local_maxima(_to_problem(req))
    return SolveResponse(
        verdict=report.verdict,
        maxima=[_point_model(cp) for cp in report.maxima],
        candidates=[_point_model(cp) for cp in report.candidates],
        reason=report.reason,
    )


def check_transfer(req: CheckTransferRequest) -> CheckTransferResponse:
    report = check_assumptions(
        make_builtin(req.name), GridSpec(req.n_x, req.n_beta, req.n_q)
    )

    def opt(v):
        return None if (isinstance(v, float) and math.isnan(v)) else float(v)

    return CheckTransferResponse(
        transfer=report.transfer,
        verdicts=report.verdicts,
        a3_sign=report.a3_sign,
        worst_margin=report.worst_margin,
        witnesses=[
            WitnessModel(
                assumption=w.assumption,
                point=[float(p) for p in w.point],
                quantity=w.quantity,
                value=opt(w.value),
                slack=opt(w.slack),
                skipped=w.skipped,
            )
            for w in report.witnesses
        ],
    )


def _to_model(spec) -> RnnModel:
    return RnnModel(W=np.asarray(spec.W, dtype=float), tf=make_builtin(spec.transfer))


def run_certify(req: CertifyRequest) -> CertifyResponse:
    model = _to_model(req.model)
    D0 = Polytope.box(model.n, req.box)
    cert = certify(model, D0, max_iters=req.max_iters, radius_tol=req.tol)
    return CertifyResponse(
        verdict=cert.verdict,
        iterations=cert.iterations,
        radius_trace=[float(r) for r in cert.radius_trace],
        final_polytope=PolytopeModel(**cert.final_polytope.to_dict()),
    )


def run_simulate(req: SimulateRequest) -> SimulateResponse:
    model = _to_model(req.model)
    traj = simulate(model, np.asarray(req.y0, dtype=float), req.steps)
    return SimulateResponse(trajectory=[[float(v) for v in row] for row in traj])


def oracle_compare(req: OracleCompareRequest) -> OracleCompareResponse:
    problem = _to_problem(req.problem)
    report = find_local_maxima(problem)
    radius = req.radius
    if radius is None:
        radius = DEFAULT_ORACLE_RADIUS.get(req.problem.transfer, 6.0)
    oracle = grid_local_maxima(problem, box_radius=radius, steps_per_axis=req.steps)

    solver_count = len(report.maxima)
    oracle_count = len(oracle.maxima)
    max_dist = None
    agree = solver_count == oracle_count
    if agree and solver_count > 0:
        dists = []
        for m in report.maxima:
            best = min(
                float(np.max(np.abs(np.asarray(x) - m.x))) for x, _ in oracle.maxima
            )
            dists.append(best)
        max_dist = max(dists)
        agree = max_dist < req.location_tol
    return OracleCompareResponse(
        solver_verdict=report.verdict,
        solver_count=solver_count,
        oracle_count=oracle_count,
        agree=agree,
        max_location_distance=max_dist,
        boundary_hits=oracle.boundary_hits,
    )
