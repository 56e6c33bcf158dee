"""Dissipativity-domain reduction for y_{k+1} = W phi(y_k).

A domain is a polytope D = {x : <l_j, x> <= alpha_j} over a fixed set of
unit directions.  One shrink step replaces every support with

    alpha'_j = min(alpha_j, max_{x in D} <l_j, W phi(x)>),

so D_{k+1} stays inside D_k and (for contractive models) swallows the
one-step image.  The inner maximization is sum c_i phi(x_i) with
c = W^T l_j; it has no interior stationary points, so the search walks
the boundary: the hyperplane solver on every facet, a parameterized
grid-plus-ascent search on lower faces (no uniqueness theory there),
exact vertex enumeration, and a mandatory coarse interior grid as a
cross-check.  Collapse of the support radius below tolerance certifies
global asymptotic stability of the origin.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .errors import DegenerateQ, UnboundedDomain
from .hyperplane import RawProblem, find_local_maxima, objective_value
from .transfer import TransferFunction

__all__ = [
    "RnnModel",
    "Polytope",
    "Certificate",
    "default_directions",
    "step",
    "max_over_polytope",
    "shrink",
    "certify",
    "simulate",
]

logger = logging.getLogger("dissipcert.dissipativity")

CERTIFIED = "Certified"
STALLED = "Stalled"
ITER_LIMIT = "IterLimit"

_FEAS_SLACK = 1e-9
_GRID_STEPS = 33          # interior cross-check density per axis
_STALL_REL = 1e-6
_STALL_RUN = 10


@dataclass(frozen=True)
class RnnModel:
    W: np.ndarray
    tf: TransferFunction

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W must be square")
        object.__setattr__(self, "W", W)

    @property
    def n(self):
        return self.W.shape[0]


def default_directions(n: int) -> np.ndarray:
    """2n axis directions plus 2n(n-1) pairwise diagonals, all unit."""
    dirs = []
    eye = np.eye(n)
    for i in range(n):
        dirs.append(eye[i])
        dirs.append(-eye[i])
    for i, j in combinations(range(n), 2):
        for si in (1.0, -1.0):
            for sj in (1.0, -1.0):
                d = si * eye[i] + sj * eye[j]
                dirs.append(d / np.sqrt(2.0))
    return np.asarray(dirs)


class Polytope:
    """Bounded polytope {x : directions @ x <= supports} with unit rows."""

    def __init__(self, directions, supports, validate=True):
        directions = np.asarray(directions, dtype=float)
        supports = np.asarray(supports, dtype=float)
        if directions.ndim != 2 or supports.shape != (directions.shape[0],):
            raise ValueError("need m direction rows and m supports")
        norms = np.linalg.norm(directions, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("zero direction row")
        self.directions = directions / norms[:, None]
        self.supports = supports / norms
        self._vertices = None
        self._grid_cache = {}
        if validate:
            self._check_bounded()

    @property
    def m(self):
        return self.directions.shape[0]

    @property
    def n(self):
        return self.directions.shape[1]

    @property
    def radius(self):
        """Max support over the unit directions; zero iff D = {0} when the
        directions positively span."""
        return float(np.max(self.supports))

    @classmethod
    def box(cls, n, half_width, directions=None):
        dirs = default_directions(n) if directions is None else np.asarray(directions, float)
        supports = half_width * np.sum(np.abs(dirs), axis=1)
        return cls(dirs, supports)

    def _check_bounded(self):
        for i in range(self.n):
            for sign in (1.0, -1.0):
                c = np.zeros(self.n)
                c[i] = -sign  # maximize sign * x_i
                res = linprog(c, A_ub=self.directions, b_ub=self.supports,
                              bounds=[(None, None)] * self.n, method="highs")
                if res.status == 3:
                    raise UnboundedDomain(f"unbounded along axis {i}")
                if res.status == 2:
                    raise ValueError("infeasible constraint set")

    def contains(self, x, slack=_FEAS_SLACK):
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.directions @ x <= self.supports + slack))

    def vertices(self):
        """Exact vertex set (n <= 4 scale); cached."""
        if self._vertices is not None:
            return self._vertices
        n, m = self.n, self.m
        scale = 1.0 + float(np.max(np.abs(self.supports)))
        verts = []
        for subset in combinations(range(m), n):
            A = self.directions[list(subset)]
            if abs(np.linalg.det(A)) < 1e-10:
                continue
            v = np.linalg.solve(A, self.supports[list(subset)])
            if not self.contains(v, slack=1e-8 * scale):
                continue
            if any(np.max(np.abs(v - u)) <= 1e-9 * scale for u in verts):
                continue
            verts.append(v)
        self._vertices = verts
        return verts

    def bounding_box(self):
        verts = np.asarray(self.vertices())
        if verts.size == 0:
            return np.zeros(self.n), np.zeros(self.n)
        return verts.min(axis=0), verts.max(axis=0)

    def sample(self, rng, count):
        """Rejection-sample interior points from the bounding box."""
        lo, hi = self.bounding_box()
        out = []
        attempts = 0
        while len(out) < count and attempts < 10_000 * count:
            x = rng.uniform(lo, hi)
            attempts += 1
            if self.contains(x):
                out.append(x)
        return out

    def to_dict(self):
        return {
            "directions": [[float(v) for v in row] for row in self.directions],
            "supports": [float(a) for a in self.supports],
        }

    @classmethod
    def from_dict(cls, data):
        return cls(data["directions"], data["supports"])


@dataclass
class Certificate:
    verdict: str
    iterations: int
    radius_trace: list
    final_polytope: Polytope
    history: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "iterations": self.iterations,
            "radius_trace": [float(r) for r in self.radius_trace],
            "final_polytope": self.final_polytope.to_dict(),
        }


def step(model: RnnModel, y):
    """One dynamics step W phi(y)."""
    y = np.asarray(y, dtype=float)
    return model.W @ np.asarray(model.tf.phi(y), dtype=float)


def simulate(model: RnnModel, y0, steps: int):
    """Trajectory (y_0 ... y_steps), shape (steps+1, n)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    y = np.asarray(y0, dtype=float)
    out = np.empty((steps + 1, y.size))
    out[0] = y
    for k in range(steps):
        y = step(model, y)
        out[k + 1] = y
    return out


def _grid_values(D: Polytope, tf, c, steps=_GRID_STEPS):
    """max of f over a feasible interior grid; phi values cached per polytope."""
    key = (steps, tf.name)
    cached = D._grid_cache.get(key)
    if cached is None:
        lo, hi = D.bounding_box()
        axes = [np.linspace(lo[i], hi[i], steps) for i in range(D.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        feas = np.all(pts @ D.directions.T <= D.supports + _FEAS_SLACK, axis=1)
        pts = pts[feas]
        phis = np.asarray(tf.phi(pts), dtype=float)
        D._grid_cache[key] = (pts, phis)
        cached = (pts, phis)
    pts, phis = cached
    if pts.shape[0] == 0:
        return -np.inf
    return float(np.max(phis @ c))


def _null_basis(A):
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * max(1.0, s[0] if s.size else 1.0)))
    return vt[rank:].T


def _max_on_face(D: Polytope, tf, c, subset, verts):
    """Grid+ascent search of f over one face {x in D : A_S x = alpha_S}.

    Engineering fallback: faces below facet level carry no uniqueness
    theory, so the search is exhaustive-at-resolution, then polished by
    a feasibility-clipped ascent inside the face's affine hull.
    """
    A = D.directions[list(subset)]
    t = D.supports[list(subset)]
    scale = 1.0 + float(np.max(np.abs(D.supports)))
    on_face = [v for v in verts if np.max(np.abs(A @ v - t)) <= 1e-7 * scale]
    if len(on_face) < 2:
        return -np.inf  # empty face or a bare vertex, covered elsewhere
    basis = _null_basis(A)
    if basis.shape[1] == 0:
        return -np.inf
    x0, *_ = np.linalg.lstsq(A, t, rcond=None)
    params = np.asarray([(v - x0) @ basis for v in on_face])
    lo = params.min(axis=0)
    hi = params.max(axis=0)
    if np.max(hi - lo) <= 1e-12 * scale:
        v = on_face[0]
        return objective_value(tf, c, v)

    axes = [np.linspace(lo[i], hi[i], _GRID_STEPS) for i in range(basis.shape[1])]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts_t = np.stack([m.ravel() for m in mesh], axis=1)
    pts = x0[None, :] + pts_t @ basis.T
    feas = np.all(pts @ D.directions.T <= D.supports + 1e-7 * scale, axis=1)
    pts = pts[feas]
    if pts.shape[0] == 0:
        return -np.inf
    vals = np.asarray(tf.phi(pts), dtype=float) @ c
    best_i = int(np.argmax(vals))
    best_x, best_v = pts[best_i], float(vals[best_i])

    # polish within the affine hull, clipped to D
    x = best_x.copy()
    fx = best_v
    for _ in range(200):
        grad = basis.T @ (c * np.asarray(tf.phi_prime(x), dtype=float))
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-10:
            break
        step_len = 1.0
        moved = False
        for _ in range(40):
            x_new = x + step_len * (basis @ grad)
            if D.contains(x_new, slack=1e-9 * scale):
                f_new = objective_value(tf, c, x_new)
                if f_new > fx:
                    x, fx = x_new, f_new
                    moved = True
                    break
            step_len *= 0.5
        if not moved:
            break
    return max(best_v, fx)


def max_over_polytope(model: RnnModel, D: Polytope, direction) -> float:
    """max over x in D of <direction, W phi(x)> = sum c_i phi(x_i), c = W^T direction.

    Facet interiors go through the hyperplane solver (any feasible
    stationary point is a valid lower bound and every facet-interior
    maximum of f over D is a hyperplane maximum); faces below that level
    and all vertices are searched directly; a coarse interior grid is the
    mandatory cross-check.  The returned value is the largest of all
    routes; a grid win beyond 1e-6 is logged as a diagnostic because it
    means the face walk missed the argmax.
    """
    direction = np.asarray(direction, dtype=float)
    c = model.W.T @ direction
    tf = model.tf
    n = D.n
    if not np.any(c != 0.0):
        return 0.0

    best = -np.inf
    verts = D.vertices()
    for v in verts:
        best = max(best, objective_value(tf, c, v))

    if n >= 2:
        for j in range(D.m):
            try:
                report = find_local_maxima(
                    RawProblem(c=c, l=D.directions[j], b=float(D.supports[j]), tf=tf)
                )
                for cp in report.candidates:
                    if D.contains(cp.x):
                        best = max(best, objective_value(tf, c, cp.x))
            except DegenerateQ:
                best = max(best, _max_on_face(D, tf, c, (j,), verts))

        for codim in range(2, n):
            for subset in combinations(range(D.m), codim):
                best = max(best, _max_on_face(D, tf, c, subset, verts))

    grid_best = _grid_values(D, tf, c)
    if grid_best > best + 1e-6 * (1.0 + abs(best)):
        logger.warning(
            "interior grid beat the face search by %.3e for direction %s",
            grid_best - best, np.array2string(direction, precision=4),
        )
    return max(best, grid_best)


def shrink(model: RnnModel, D: Polytope) -> Polytope:
    """One reduction step; same directions, supports clipped from above."""
    new_supports = np.array([
        min(float(D.supports[j]), max_over_polytope(model, D, D.directions[j]))
        for j in range(D.m)
    ])
    return Polytope(D.directions, new_supports, validate=False)


def certify(model: RnnModel, D0: Polytope, max_iters: int = 200,
            radius_tol: float = 1e-3, keep_history: bool = False) -> Certificate:
    """Iterate shrink until the support radius collapses, stalls, or times out."""
    if np.any(D0.supports <= 0.0):
        raise ValueError("certification needs the origin strictly interior")
    D = D0
    trace = [D.radius]
    history = [D] if keep_history else []
    stall_run = 0
    for k in range(1, max_iters + 1):
        D = shrink(model, D)
        r_prev, r = trace[-1], D.radius
        trace.append(r)
        if keep_history:
            history.append(D)
        if r < radius_tol:
            return Certificate(CERTIFIED, k, trace, D, history)
        if r_prev - r < _STALL_REL * max(r_prev, 1e-300):
            stall_run += 1
            if stall_run >= _STALL_RUN:
                return Certificate(STALLED, k, trace, D, history)
        else:
            stall_run = 0
    return Certificate(ITER_LIMIT, max_iters, trace, D, history)
