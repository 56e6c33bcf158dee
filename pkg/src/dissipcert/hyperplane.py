"""Local maxima of f(x) = sum c_i phi(x_i) over a hyperplane l.x = b.

Pipeline
--------
normalize     flips axes until all cost coefficients are positive, then
              screens the normal: a zero or mixed-sign l admits no local
              maximum at all, an all-negative l is flipped globally.
              Leaves q_j = l_j / c_j (pairwise distinct, else refused)
              and beta_max with beta_max * max(q) = phi'(0).

main orthant  critical points satisfy x_j = psi(beta q_j); the height
              F(beta) = sum l_j psi(beta q_j) is strictly decreasing, so
              F(beta) = b has at most one solution and it is always a
              local maximum (f is concave on the closed main orthant).

side orthants for each index k the candidate curve is x_k = -psi(beta q_k),
              x_j = +psi(beta q_j); its height is g_k(beta).  Roots of
              g_k' are located by a sign scan plus bisection (at most one
              root when q_k = max q, at most two otherwise; more is a
              structural violation and aborts).  On every strictly
              increasing stretch g_k(beta) = b is solved by bisection and
              the resulting stationary point is classified through the
              projected-Hessian spectrum.

A candidate with a coordinate inside the zero band is flagged
boundary-degenerate and returned as-is; boundary maxima are isolated and
never coexist with an interior one, so no perturbation search is run.
At most one maximum should ever survive classification; two or more is
reported as the falsifiable TheoremViolation verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, DegenerateQ, DomainError, TheoremViolationError
from .spectra import DEGENERATE, MAXIMUM, SpectralReport, build_diagonal, classify
from .transfer import TransferFunction

__all__ = [
    "RawProblem",
    "NormalizedProblem",
    "EarlyVerdict",
    "CriticalPoint",
    "MaximaReport",
    "ThreePointWitness",
    "UNIQUE_MAX",
    "NO_MAX",
    "THEOREM_VIOLATION",
    "normalize",
    "f1",
    "f1_prime",
    "main_orthant_candidate",
    "side_branch_g",
    "side_branch_value",
    "stationary_point",
    "side_orthant_candidates",
    "find_local_maxima",
    "three_point_expression",
    "objective_value",
]

UNIQUE_MAX = "UniqueMax"
NO_MAX = "NoMax"
THEOREM_VIOLATION = "TheoremViolation"

TOL_B_REL = 1e-10          # |g(beta) - b| target
TOL_WIDTH_REL = 1e-14      # beta-interval fallback target
TOL_ZERO_REL = 1e-7        # zero-coordinate band for boundary flagging
Q_DISTINCT_RTOL = 1e-12
SIDE_GRID_POINTS = 512
SIDE_GRID_MARGIN_REL = 1e-6
_MAX_HALVINGS = 200


@dataclass(frozen=True)
class RawProblem:
    c: np.ndarray
    l: np.ndarray
    b: float
    tf: TransferFunction

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))
        object.__setattr__(self, "l", np.asarray(self.l, dtype=float))
        object.__setattr__(self, "b", float(self.b))
        if self.c.ndim != 1 or self.c.shape != self.l.shape:
            raise ValueError("c and l must be 1-d with matching lengths")
        if self.c.size < 2:
            raise ValueError("problems need n >= 2")


@dataclass(frozen=True)
class NormalizedProblem:
    c: np.ndarray             # all positive
    l: np.ndarray             # all positive
    b: float
    flips: np.ndarray         # +-1 per axis; original x = flips * normalized x
    q: np.ndarray             # l_j / c_j, pairwise distinct
    beta_max: float           # beta_max * max(q) = phi'(0)
    argmax_q: int
    tf: TransferFunction


@dataclass(frozen=True)
class EarlyVerdict:
    verdict: str
    reason: str


@dataclass
class CriticalPoint:
    beta: float
    x: np.ndarray
    negative_index: Optional[int]  # None -> main orthant
    spectral: SpectralReport
    is_boundary_degenerate: bool

    @property
    def orthant(self) -> str:
        if self.negative_index is None:
            return "main"
        return f"side:{self.negative_index}"

    def to_dict(self, include_classification=True):
        out = {
            "beta": float(self.beta),
            "x": [float(v) for v in self.x],
            "orthant": self.orthant,
            "boundary_flag": self.is_boundary_degenerate,
        }
        if include_classification:
            out["classification"] = self.spectral.verdict
        return out


@dataclass
class MaximaReport:
    verdict: str
    maxima: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    reason: Optional[str] = None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "maxima": [m.to_dict() for m in self.maxima],
            "candidates": [c.to_dict() for c in self.candidates],
            "reason": self.reason,
        }


@dataclass
class ThreePointWitness:
    q1: float
    q2: float
    q3: float
    beta1: float
    beta2: float
    x1: float
    x2: float
    x3: float
    y1: float
    y2: float
    y3: float
    z1: float
    z2: float
    z3: float
    expression_value: float


def objective_value(tf, c, x):
    """f(x) = sum c_i phi(x_i)."""
    return float(np.dot(np.asarray(c, dtype=float), tf.phi(np.asarray(x, dtype=float))))


def _psi_safe(tf, y):
    """psi with a domain guard and the top endpoint snapped.

    beta_max * max(q) rounds a couple of ulps off s0 in either direction;
    psi's square-root singularity turns that into ~1e-8, so values inside
    the rounding band are pinned to the exact endpoint psi(s0) = 0.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError(float(np.min(y)), tf.s0)
    band = 4.0 * np.finfo(float).eps * tf.s0
    if np.any(y > tf.s0 * (1.0 + 4.0 * np.finfo(float).eps)):
        raise DomainError(float(np.max(y)), tf.s0)
    y = np.where(y >= tf.s0 - band, tf.s0, y)
    return tf.psi(y)


def _psi_prime_safe(tf, y):
    y = np.asarray(y, dtype=float)
    top = np.nextafter(tf.s0, 0.0)
    return tf.psi_prime(np.minimum(y, top))


def normalize(p: RawProblem):
    """Sign normalization; returns NormalizedProblem or EarlyVerdict(NoMax)."""
    c = p.c.copy()
    l = p.l.copy()
    b = p.b
    n = c.size

    if np.any(c == 0.0):
        return EarlyVerdict(NO_MAX, "a zero cost coefficient leaves an unconstrained "
                                    "strictly increasing direction")

    flips = np.where(c < 0.0, -1.0, 1.0)
    c = c * flips
    l = l * flips

    if np.any(l == 0.0):
        return EarlyVerdict(NO_MAX, "a zero normal component lets that coordinate grow freely")
    if np.any(l > 0.0) and np.any(l < 0.0):
        return EarlyVerdict(NO_MAX, "mixed-sign normal admits unbounded increase along the plane")
    if np.all(l < 0.0):
        l = -l
        b = -b

    q = l / c
    # Coincident ratios void the side-orthant root-count bounds, except
    # when the tied coordinates are fully interchangeable (same c, same
    # l): then the +psi/-psi pair cancels out of every side sweep inside
    # the tie and the merged weights stay positive outside it, so the
    # structural bounds survive.  Anything else is refused, not merged.
    order = np.argsort(q)
    for a, bidx in zip(order, order[1:]):
        qa, qb = q[a], q[bidx]
        if abs(qb - qa) <= Q_DISTINCT_RTOL * max(abs(qa), abs(qb)):
            symmetric = (
                abs(c[a] - c[bidx]) <= Q_DISTINCT_RTOL * max(c[a], c[bidx])
                and abs(l[a] - l[bidx]) <= Q_DISTINCT_RTOL * max(l[a], l[bidx])
            )
            if not symmetric:
                raise DegenerateQ(
                    "coincident l_j/c_j ratios; refusing to merge coordinates"
                )

    argmax_q = int(np.argmax(q))
    beta_max = p.tf.s0 / float(q[argmax_q])
    return NormalizedProblem(
        c=c, l=l, b=float(b), flips=flips, q=q,
        beta_max=beta_max, argmax_q=argmax_q, tf=p.tf,
    )


def f1(np_: NormalizedProblem, beta):
    """Main-orthant height sum l_j psi(beta q_j); strictly decreasing."""
    return float(np.dot(np_.l, _psi_safe(np_.tf, beta * np_.q)))


def f1_prime(np_: NormalizedProblem, beta):
    return float(np.dot(np_.l * np_.q, _psi_prime_safe(np_.tf, beta * np_.q)))


def _bisect_monotone(fn, lo, hi, target, increasing, beta_scale, b_tol):
    """Solve fn(beta) = target on [lo, hi] for monotone fn.

    Stops on the value tolerance or, failing that, the interval width."""
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if abs(fm - target) <= b_tol:
            return mid
        if (fm > target) == (not increasing):
            lo = mid
        else:
            hi = mid
        if hi - lo <= TOL_WIDTH_REL * beta_scale:
            break
    return 0.5 * (lo + hi)


def stationary_point(np_: NormalizedProblem, beta, negative_index=None) -> "CriticalPoint":
    """Build and classify the critical point at beta.

    negative_index None puts the point in the main orthant (all
    coordinates +psi(beta q_j)); index k flips coordinate k to
    -psi(beta q_k).  Useful for probing the candidate curves directly;
    the orthant sweeps call this for every solved beta.
    """
    x = np.asarray(_psi_safe(np_.tf, beta * np_.q), dtype=float)
    if negative_index is not None:
        x = x.copy()
        x[negative_index] = -x[negative_index]
    d = build_diagonal(np_.tf, np_.c, x)
    rep = classify(d, np_.l)
    tol_zero = TOL_ZERO_REL * (1.0 + float(np.max(np.abs(x))))
    flag = bool(np.min(np.abs(x)) < tol_zero)
    return CriticalPoint(
        beta=float(beta),
        x=x,
        negative_index=negative_index,
        spectral=rep,
        is_boundary_degenerate=flag,
    )


def main_orthant_candidate(np_: NormalizedProblem):
    """Unique main-orthant stationary point, or None when b sits below reach.

    F is continuous, strictly decreasing on (0, beta_max] and blows up as
    beta -> 0+, so F(beta) = b has exactly one solution iff b >= F(beta_max).
    The returned point is always a local maximum (concavity).
    """
    b = np_.b
    b_tol = TOL_B_REL * (1.0 + abs(b))
    f_end = f1(np_, np_.beta_max)
    if b < f_end - b_tol:
        return None
    if abs(b - f_end) <= b_tol:
        return stationary_point(np_, np_.beta_max, None)

    hi = np_.beta_max
    lo = hi
    for _ in range(64):
        lo *= 0.5
        if f1(np_, lo) >= b:
            break
    else:
        raise ConvergenceFailure(f"could not bracket F(beta) = {b} above beta = {lo}")
    beta = _bisect_monotone(lambda t: f1(np_, t), lo, hi, b,
                            increasing=False, beta_scale=np_.beta_max, b_tol=b_tol)
    return stationary_point(np_, beta, None)


def side_branch_g(np_: NormalizedProblem, k: int, beta):
    """(g_k, g_k') at beta: height and slope of the side-k candidate curve."""
    psi_vals = np.asarray(_psi_safe(np_.tf, beta * np_.q), dtype=float)
    psip_vals = np.asarray(_psi_prime_safe(np_.tf, beta * np_.q), dtype=float)
    sign = np.ones_like(np_.l)
    sign[k] = -1.0
    g = float(np.dot(np_.l * sign, psi_vals))
    gp = float(np.dot(np_.l * np_.q * sign, psip_vals))
    return g, gp


def side_branch_value(np_, k, beta):
    """g_k(beta) alone; valid on (0, beta_max] including the endpoint,
    where the slope diverges but the value is finite."""
    sign = np.ones_like(np_.l)
    sign[k] = -1.0
    return float(np.dot(np_.l * sign, _psi_safe(np_.tf, beta * np_.q)))


def _g_prime_grid(np_, k, betas):
    """Vectorized g_k' over a beta grid, plus its rounding-noise floor.

    Symmetric ties cancel g_k' exactly; the float residue then flips sign
    at random, so values below the termwise cancellation noise must not
    count as crossings.
    """
    sign = np.ones(np_.l.size)
    sign[k] = -1.0
    w = np_.l * np_.q * sign
    args = np.outer(betas, np_.q)
    terms = np.asarray(_psi_prime_safe(np_.tf, args), dtype=float) * w
    noise = 64.0 * np.finfo(float).eps * np.sum(np.abs(terms), axis=1)
    return np.sum(terms, axis=1), noise


def side_orthant_candidates(np_: NormalizedProblem, k: int):
    """Stationary points on side-orthant k's strictly increasing stretches.

    Raises TheoremViolationError if the g_k' sign scan finds more roots
    than the structural bound (one when q_k = max q, two otherwise).
    """
    tf = np_.tf
    b = np_.b
    b_tol = TOL_B_REL * (1.0 + abs(b))
    lo = SIDE_GRID_MARGIN_REL * np_.beta_max
    hi = (1.0 - SIDE_GRID_MARGIN_REL) * np_.beta_max
    grid = np.geomspace(lo, hi, SIDE_GRID_POINTS)
    gp, noise = _g_prime_grid(np_, k, grid)

    def bisect_slope_root(a, c, fa):
        for _ in range(200):
            mid = 0.5 * (a + c)
            fm = side_branch_g(np_, k, mid)[1]
            if fa * fm <= 0.0:
                c = mid
            else:
                a, fa = mid, fm
            if c - a <= 1e-13 * np_.beta_max:
                break
        return 0.5 * (a + c)

    roots = []
    sgn = np.where(np.abs(gp) <= noise, 0.0, np.sign(gp))
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        roots.append(bisect_slope_root(float(grid[i]), float(grid[i + 1]), gp[i]))

    # a root hiding between the scan edge and beta_max is forced whenever
    # the last sampled slope disagrees with the endpoint asymptote
    # (+inf when q_k carries the max ratio, -inf otherwise)
    hi_end = hi
    asymptote_sign = 1.0 if k == np_.argmax_q else -1.0
    if sgn[-1] == -asymptote_sign:
        edge = np_.beta_max * (1.0 - 1e-12)
        roots.append(bisect_slope_root(float(grid[-1]), edge, gp[-1]))
        hi_end = edge

    allowed = 1 if k == np_.argmax_q else 2
    if len(roots) > allowed:
        raise TheoremViolationError(
            f"g' for side orthant {k} has {len(roots)} sign changes, bound is {allowed}"
        )

    points = []
    bounds = [lo] + roots + [hi_end]
    for seg_lo, seg_hi in zip(bounds, bounds[1:]):
        mid = math.sqrt(seg_lo * seg_hi)
        gp_mid, noise_mid = _g_prime_grid(np_, k, np.array([mid]))
        if gp_mid[0] <= noise_mid[0]:
            continue

        # left bracket: extend toward 0 when the stretch starts at the scan edge
        a = seg_lo
        if seg_lo == lo:
            for _ in range(_MAX_HALVINGS):
                if side_branch_value(np_, k, a) <= b:
                    break
                a *= 0.5
            else:
                a = None
        if a is not None and side_branch_value(np_, k, a) > b + b_tol:
            a = None
        if a is None:
            continue

        # right bracket: the stretch reaching the final bound continues to
        # beta_max itself (only happens for k = argmax q)
        if seg_hi == bounds[-1]:
            c = np_.beta_max
            g_end = side_branch_value(np_, k, c)
            if b > g_end + b_tol:
                continue
            if abs(b - g_end) <= b_tol:
                points.append(stationary_point(np_, c, k))
                continue
        else:
            c = seg_hi
            if b > side_branch_value(np_, k, c) + b_tol:
                continue

        beta = _bisect_monotone(lambda t: side_branch_value(np_, k, t), a, c, b,
                                increasing=True, beta_scale=np_.beta_max, b_tol=b_tol)
        points.append(stationary_point(np_, beta, k))

    return points


def _is_side_maximum(cp: CriticalPoint) -> bool:
    """Side candidates pass on the spectral verdict; the strict g'(0) < 0
    sufficiency backs up points the zero band would otherwise blur."""
    if cp.spectral.verdict == MAXIMUM:
        return True
    if cp.spectral.verdict == DEGENERATE:
        gp0 = cp.spectral.g_prime_zero
        return bool(gp0 == gp0 and gp0 < -1e-12)
    return False


def _mapped_back(cp: CriticalPoint, flips) -> CriticalPoint:
    return CriticalPoint(
        beta=cp.beta,
        x=cp.x * flips,
        negative_index=cp.negative_index,
        spectral=cp.spectral,
        is_boundary_degenerate=cp.is_boundary_degenerate,
    )


def find_local_maxima(p: RawProblem) -> MaximaReport:
    """All stationary points plus the (at most one) classified maximum.

    Points are reported in the caller's coordinate frame; the orthant
    label refers to the sign-normalized frame.
    """
    norm = normalize(p)
    if isinstance(norm, EarlyVerdict):
        return MaximaReport(verdict=norm.verdict, reason=norm.reason)

    candidates = []
    main = main_orthant_candidate(norm)
    if main is not None:
        candidates.append(main)
    for k in range(norm.q.size):
        candidates.extend(side_orthant_candidates(norm, k))

    maxima = []
    for cp in candidates:
        if cp.negative_index is None or _is_side_maximum(cp):
            maxima.append(cp)

    # b = F(beta_max) makes the main curve and the argmax-q side curve
    # meet at the same boundary point; keep one copy
    deduped = []
    for cp in maxima:
        scale = 1.0 + float(np.max(np.abs(cp.x)))
        if any(np.max(np.abs(cp.x - kept.x)) <= 1e-7 * scale for kept in deduped):
            continue
        deduped.append(cp)

    verdict = THEOREM_VIOLATION if len(deduped) > 1 else (
        UNIQUE_MAX if deduped else NO_MAX)
    return MaximaReport(
        verdict=verdict,
        maxima=[_mapped_back(cp, norm.flips) for cp in deduped],
        candidates=[_mapped_back(cp, norm.flips) for cp in candidates],
    )


def three_point_expression(tf, q1, q2, q3, beta1, beta2) -> ThreePointWitness:
    """Witness for the two-side-orthant exclusion inequality.

    With psi_b(beta q) = q psi'(beta q) and

        x_j = psi_b(beta2 q_j) / psi_b(beta1 q_j)
        y_j = psi(beta2 q_j) / psi_b(beta2 q_j)
        z_j = psi(beta1 q_j) / psi_b(beta1 q_j)

    the returned expression is

        x3 (z1-z2) + x3 x1 (y1-y2) + x2 (z1-z3) + x2 x1 (y1-y3)
        + x1 (z3-z2) + (y3-y2)(x1 x2 + x3 x2 - x3 x1)

    which stays strictly positive whenever q1 or q3 carries the maximum
    ratio, ruling out simultaneous maxima in two side orthants.  At
    beta1 = beta2 it collapses to 4 (z1 - z2).
    """
    qs = (float(q1), float(q2), float(q3))
    beta1, beta2 = float(beta1), float(beta2)
    if min(qs) <= 0.0:
        raise ValueError("ratios must be positive")
    if len({*qs}) != 3:
        raise ValueError("ratios must be pairwise distinct")
    if not (0.0 < beta2 <= beta1):
        raise ValueError("need 0 < beta2 <= beta1")
    if beta1 * max(qs) >= tf.s0:
        raise DomainError(beta1 * max(qs), tf.s0)

    def psi_b(beta, q):
        return q * float(tf.psi_prime(beta * q))

    x = [psi_b(beta2, q) / psi_b(beta1, q) for q in qs]
    y = [float(tf.psi(beta2 * q)) / psi_b(beta2, q) for q in qs]
    z = [float(tf.psi(beta1 * q)) / psi_b(beta1, q) for q in qs]
    x1, x2, x3 = x
    y1, y2, y3 = y
    z1, z2, z3 = z
    value = (
        x3 * (z1 - z2)
        + x3 * x1 * (y1 - y2)
        + x2 * (z1 - z3)
        + x2 * x1 * (y1 - y3)
        + x1 * (z3 - z2)
        + (y3 - y2) * (x1 * x2 + x3 * x2 - x3 * x1)
    )
    return ThreePointWitness(
        q1=qs[0], q2=qs[1], q3=qs[2], beta1=beta1, beta2=beta2,
        x1=x1, x2=x2, x3=x3, y1=y1, y2=y2, y3=y3, z1=z1, z2=z2, z3=z3,
        expression_value=float(value),
    )
