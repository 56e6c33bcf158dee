"""FastAPI application exposing the certification toolkit.

Run with:  uvicorn dissipcert.service.app:app
"""

from fastapi import FastAPI, HTTPException

from ..errors import DissipcertError
from . import handlers
from .schemas import (
    CertifyRequest,
    CertifyResponse,
    CheckTransferRequest,
    CheckTransferResponse,
    OracleCompareRequest,
    OracleCompareResponse,
    ProblemRequest,
    SimulateRequest,
    SimulateResponse,
    SolveResponse,
)

app = FastAPI(
    title="dissipcert",
    description="Hyperplane maximization and dissipativity-domain stability certificates",
)


def _guarded(fn, *args):
    try:
        return fn(*args)
    except DissipcertError as exc:
        raise HTTPException(status_code=422, detail={
            "error": type(exc).__name__,
            "message": str(exc),
        }) from exc
    except ValueError as exc:
        raise HTTPException(status_code=422, detail={
            "error": "ValueError",
            "message": str(exc),
        }) from exc


@app.get("/health")
def health():
    return {"status": "ok"}


@app.post("/solve", response_model=SolveResponse)
def solve(req: ProblemRequest):
    return _guarded(handlers.solve, req)


@app.post("/check-transfer", response_model=CheckTransferResponse)
def check_transfer(req: CheckTransferRequest):
    return _guarded(handlers.check_transfer, req)


@app.post("/certify", response_model=CertifyResponse)
def certify(req: CertifyRequest):
    return _guarded(handlers.run_certify, req)


@app.post("/simulate", response_model=SimulateResponse)
def simulate(req: SimulateRequest):
    return _guarded(handlers.run_simulate, req)


@app.post("/oracle-compare", response_model=OracleCompareResponse)
def oracle_compare(req: OracleCompareRequest):
    return _guarded(handlers.oracle_compare, req)
