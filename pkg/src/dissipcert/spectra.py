"""Projected-Hessian spectra and the secular eigenvalue route.

At a critical point the Hessian of f(x) = sum c_i phi(x_i) is the
diagonal D = diag(d_j), d_j = c_j phi''(x_j).  Restricting to the
hyperplane's tangent space gives K = P D P with P = I - l l^T / ||l||^2.
Zero is always an eigenvalue of K (along l); the remaining eigenvalues
are the roots of the secular function

    g(lambda) = sum_i lambda l_i^2 / (||l||^2 (lambda - d_i)),

one root strictly inside each interval between consecutive distinct d
values.  classify computes the spectrum twice, by symmetric
eigendecomposition and by bracketed bisection on g, and renders the
maximality verdict from the eigenvalue signs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurvature, PoleError

__all__ = [
    "SpectralReport",
    "MAXIMUM",
    "NOT_MAXIMUM",
    "DEGENERATE",
    "build_diagonal",
    "secular_g",
    "g_prime_at_zero",
    "classify",
]

MAXIMUM = "Maximum"
NOT_MAXIMUM = "NotMaximum"
DEGENERATE = "Degenerate"

# relative scaling for the zero-eigenvalue band; K's kernel is exact in
# theory but drifts with conditioning in floats
EIG_TOL_REL = 1e-9

_POLE_TOL = 1e-14
_GROUP_RTOL = 1e-12


@dataclass
class SpectralReport:
    d: np.ndarray
    l: np.ndarray  # unit-scaled normal
    eigs_direct: np.ndarray
    eigs_secular: np.ndarray
    g_prime_zero: float  # nan when some d_j vanishes
    verdict: str

    def to_dict(self):
        return {
            "d": [float(v) for v in self.d],
            "l": [float(v) for v in self.l],
            "eigs_direct": [float(v) for v in self.eigs_direct],
            "eigs_secular": [float(v) for v in self.eigs_secular],
            "g_prime_zero": float(self.g_prime_zero),
            "verdict": self.verdict,
        }


def build_diagonal(tf, c, x0):
    """Curvature diagonal d_j = c_j phi''(x0_j)."""
    c = np.asarray(c, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if c.shape != x0.shape:
        raise ValueError("c and x0 must have matching lengths")
    return c * np.asarray(tf.phi_double_prime(x0), dtype=float)


def secular_g(lam, d, l):
    """Evaluate g(lambda); lambda must stay off the poles {d_j}."""
    d = np.asarray(d, dtype=float)
    l = np.asarray(l, dtype=float)
    lam = float(lam)
    if np.min(np.abs(lam - d)) < _POLE_TOL:
        raise PoleError(f"lambda = {lam} hits a pole of g")
    return lam * float(np.sum(l**2 / (lam - d))) / float(np.sum(l**2))


def g_prime_at_zero(d, l):
    """g'(0) = -sum l_j^2 / (d_j ||l||^2); sign decides Theorem-6 style tests."""
    d = np.asarray(d, dtype=float)
    l = np.asarray(l, dtype=float)
    if np.any(d == 0.0):
        raise DegenerateCurvature("zero curvature entry; g'(0) undefined")
    return -float(np.sum(l**2 / d)) / float(np.sum(l**2))


def _secular_eigenvalues(d, l):
    """All n eigenvalues of K from the secular route.

    Distinct d values with positive l-weight are poles; one root of
    r(lam) = sum w_i/(lam - e_i) lies in each gap between consecutive
    poles.  A d value repeated k+1 times contributes k eigenvalues at
    that value; a group whose l-weight vanishes keeps its full
    multiplicity (those axes are untouched by the projector).  The zero
    eigenvalue is appended unconditionally.
    """
    d = np.asarray(d, dtype=float)
    l = np.asarray(l, dtype=float)
    scale = max(1.0, float(np.max(np.abs(d))) if d.size else 1.0)
    order = np.argsort(d)
    ds, ws = d[order], (l**2)[order]

    groups = []  # (value, multiplicity, weight)
    i = 0
    while i < len(ds):
        j = i
        while j + 1 < len(ds) and abs(ds[j + 1] - ds[i]) <= _GROUP_RTOL * scale:
            j += 1
        groups.append((float(ds[i]), j - i + 1, float(np.sum(ws[i : j + 1]))))
        i = j + 1

    w_floor = 1e-30 * float(np.sum(ws))
    eigs = []
    active = []
    for value, mult, weight in groups:
        if weight <= w_floor:
            eigs.extend([value] * mult)
        else:
            eigs.extend([value] * (mult - 1))
            active.append((value, weight))

    def r(lam):
        return sum(w / (lam - v) for v, w in active)

    for (elo, _), (ehi, _) in zip(active, active[1:]):
        off = 1e-12 * max(abs(elo), abs(ehi), 1e-3 * scale)
        lo, hi = elo + off, ehi - off
        # r falls from +inf to -inf across the gap; shrink the offset if
        # it overshot a root hugging the pole
        for _ in range(8):
            if r(lo) > 0.0 and r(hi) < 0.0:
                break
            off *= 0.125
            lo, hi = elo + off, ehi - off
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if r(mid) > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * scale:
                break
        eigs.append(0.5 * (lo + hi))

    eigs.append(0.0)
    return np.sort(np.asarray(eigs))


def classify(d, l, tol_eig=None) -> SpectralReport:
    """Spectrum of K by both routes plus the maximality verdict.

    Maximum      n-1 eigenvalues below -tol and exactly one inside the
                 zero band.
    NotMaximum   some eigenvalue above +tol.
    Degenerate   otherwise (extra near-zero eigenvalues; the
                 second-order test is only necessary there and the
                 ambiguity is surfaced, never coerced).
    """
    d = np.asarray(d, dtype=float)
    l = np.asarray(l, dtype=float)
    norm = float(np.linalg.norm(l))
    if norm == 0.0:
        raise ValueError("hyperplane normal must be nonzero")
    lu = l / norm
    n = d.size

    proj = np.eye(n) - np.outer(lu, lu)
    K = proj @ np.diag(d) @ proj
    eigs_direct = np.linalg.eigvalsh(0.5 * (K + K.T))
    eigs_secular = _secular_eigenvalues(d, lu)

    if tol_eig is None:
        tol_eig = EIG_TOL_REL * max(1.0, float(np.max(np.abs(d))) if n else 1.0)

    n_pos = int(np.sum(eigs_direct > tol_eig))
    n_neg = int(np.sum(eigs_direct < -tol_eig))
    n_zero = n - n_pos - n_neg
    if n_pos > 0:
        verdict = NOT_MAXIMUM
    elif n_neg == n - 1 and n_zero == 1:
        verdict = MAXIMUM
    else:
        verdict = DEGENERATE

    try:
        gp0 = g_prime_at_zero(d, l)
    except DegenerateCurvature:
        gp0 = float("nan")

    return SpectralReport(
        d=d,
        l=lu,
        eigs_direct=eigs_direct,
        eigs_secular=eigs_secular,
        g_prime_zero=gp0,
        verdict=verdict,
    )
