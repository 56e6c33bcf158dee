"""Request/response models for the certification service."""

from typing import Optional

from pydantic import BaseModel, Field


class ProblemRequest(BaseModel):
    transfer: str
    c: list[float]
    l: list[float]
    b: float


class CriticalPointModel(BaseModel):
    beta: float
    x: list[float]
    orthant: str
    boundary_flag: bool
    classification: str


class SolveResponse(BaseModel):
    verdict: str
    maxima: list[CriticalPointModel]
    candidates: list[CriticalPointModel]
    reason: Optional[str] = None


class CheckTransferRequest(BaseModel):
    name: str
    n_x: int = 256
    n_beta: int = 256
    n_q: int = 256


class WitnessModel(BaseModel):
    assumption: str
    point: list[float]
    quantity: str
    value: Optional[float] = None
    slack: Optional[float] = None
    skipped: bool


class CheckTransferResponse(BaseModel):
    version: int = 1
    transfer: str
    verdicts: dict[str, str]
    a3_sign: int
    worst_margin: float
    witnesses: list[WitnessModel]


class ModelSpec(BaseModel):
    transfer: str
    W: list[list[float]]


class CertifyRequest(BaseModel):
    model: ModelSpec
    box: float = 1.0
    tol: float = 1e-3
    max_iters: int = 200


class PolytopeModel(BaseModel):
    directions: list[list[float]]
    supports: list[float]


class CertifyResponse(BaseModel):
    verdict: str
    iterations: int
    radius_trace: list[float]
    final_polytope: PolytopeModel


class SimulateRequest(BaseModel):
    model: ModelSpec
    y0: list[float]
    steps: int = Field(default=50, ge=1)


class SimulateResponse(BaseModel):
    trajectory: list[list[float]]


class OracleCompareRequest(BaseModel):
    problem: ProblemRequest
    radius: Optional[float] = None
    steps: int = 801
    location_tol: float = 1e-3
    seed: int = 42


class OracleCompareResponse(BaseModel):
    solver_verdict: str
    solver_count: int
    oracle_count: int
    agree: bool
    max_location_distance: Optional[float] = None
    boundary_hits: int
