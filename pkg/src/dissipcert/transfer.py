"""Transfer functions and their inverse-slope maps.

A transfer function phi is an odd, bounded, strictly increasing sigmoid
whose slope phi' decreases away from the origin.  That makes phi'
invertible on [0, inf); the inverse, psi : (0, phi'(0)] -> [0, inf),
sends a slope value back to the nonnegative argument attaining it.
Everything downstream (critical-point equations, curvature tests,
certification) is phrased in terms of psi and psi'.

Two built-ins ship with closed forms:

    tanh    psi(y) = arctanh(sqrt(1-y))        psi'(y) = -1/(2 y sqrt(1-y))
    arctan  psi(y) = sqrt(1/y - 1)             psi'(y) = -1/(2 y^(3/2) sqrt(1-y))

both with s0 = phi'(0) = 1.  psi for tanh is evaluated as
ln(1 + sqrt(1-y)) - ln(y)/2, which is algebraically identical but free of
the cancellation that costs ~1e-8 near y -> 0; similarly sqrt((1-y)/y)
for arctan near y -> 1.

check_assumptions numerically audits the five curvature conditions the
solver relies on.  It samples grids, it does not prove anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, UnknownTransfer

__all__ = [
    "TransferFunction",
    "GridSpec",
    "AssumptionWitness",
    "AssumptionReport",
    "make_builtin",
    "make_custom",
    "psi_checked",
    "check_assumptions",
    "a2_quantity",
    "a2_derivative",
    "a4_derivative",
    "a5_inner",
    "a5_inner_derivative",
    "a5_quantity",
]


@dataclass(frozen=True)
class TransferFunction:
    """phi with its derivative chain and the inverse-slope map psi.

    All callables accept scalars or numpy arrays.  Instances are frozen;
    they may be shared freely between threads.
    """

    name: str
    phi: Callable
    phi_prime: Callable
    phi_double_prime: Callable
    psi: Callable
    psi_prime: Callable
    s0: float


def _tanh_phi_prime(x):
    # sech^2 written to survive large |x| (cosh overflows past ~710)
    t = np.exp(-2.0 * np.abs(x))
    return 4.0 * t / (1.0 + t) ** 2


def _tanh_phi_double_prime(x):
    return -2.0 * np.tanh(x) * _tanh_phi_prime(x)


def _tanh_psi(y):
    # arctanh(sqrt(1-y)) without the 1-z cancellation near y -> 0
    return np.log1p(np.sqrt(1.0 - np.asarray(y, dtype=float))) - 0.5 * np.log(y)


def _tanh_psi_prime(y):
    y = np.asarray(y, dtype=float)
    return -1.0 / (2.0 * y * np.sqrt(1.0 - y))


def _arctan_phi_prime(x):
    return 1.0 / (1.0 + np.square(x))


def _arctan_phi_double_prime(x):
    return -2.0 * x / np.square(1.0 + np.square(x))


def _arctan_psi(y):
    y = np.asarray(y, dtype=float)
    return np.sqrt((1.0 - y) / y)


def _arctan_psi_prime(y):
    y = np.asarray(y, dtype=float)
    return -1.0 / (2.0 * y**1.5 * np.sqrt(1.0 - y))


_BUILTINS = {
    "tanh": dict(
        phi=np.tanh,
        phi_prime=_tanh_phi_prime,
        phi_double_prime=_tanh_phi_double_prime,
        psi=_tanh_psi,
        psi_prime=_tanh_psi_prime,
        s0=1.0,
    ),
    "arctan": dict(
        phi=np.arctan,
        phi_prime=_arctan_phi_prime,
        phi_double_prime=_arctan_phi_double_prime,
        psi=_arctan_psi,
        psi_prime=_arctan_psi_prime,
        s0=1.0,
    ),
}


def make_builtin(name: str) -> TransferFunction:
    """Return one of the shipped transfer functions ("tanh" or "arctan")."""
    try:
        spec = _BUILTINS[name]
    except KeyError:
        raise UnknownTransfer(
            f"unknown transfer {name!r}; built-ins are {sorted(_BUILTINS)}"
        ) from None
    return TransferFunction(name=name, **spec)


_X_CAP = 50.0  # bracketing bound for the numeric inverse of phi'


def make_custom(name, phi, phi_prime, phi_double_prime) -> TransferFunction:
    """Wrap user callables; psi is obtained by bisection on phi'(x) = y.

    phi' strictly decreasing on [0, X_CAP] guarantees the bracket.  psi'
    follows from the identity psi'(y) = 1 / phi''(psi(y)).
    """
    s0 = float(phi_prime(0.0))

    def psi_scalar(y):
        y = float(y)
        if not (0.0 < y <= s0 * (1.0 + 4e-16)):
            raise DomainError(y, s0)
        if y >= s0:
            return 0.0
        lo, hi = 0.0, _X_CAP
        flo = phi_prime(lo) - y
        fhi = phi_prime(hi) - y
        if flo < 0.0 or fhi > 0.0:
            raise DomainError(y, s0, f"phi'(x) = {y} has no root in [0, {_X_CAP}]")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if phi_prime(mid) - y > 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    psi = np.vectorize(psi_scalar, otypes=[float])

    def psi_prime(y):
        return 1.0 / phi_double_prime(psi(y))

    return TransferFunction(
        name=name,
        phi=phi,
        phi_prime=phi_prime,
        phi_double_prime=phi_double_prime,
        psi=psi,
        psi_prime=psi_prime,
        s0=s0,
    )


def psi_checked(tf: TransferFunction, y: float) -> float:
    """psi(y) with an explicit domain guard: y must lie in (0, s0]."""
    y = float(y)
    if not (0.0 < y <= tf.s0):
        raise DomainError(y, tf.s0)
    return float(tf.psi(y))


# ----------------------------------------------------------------------
# Assumption audit
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Sampling density for check_assumptions; every axis must be >= 16."""

    n_x: int = 256
    n_beta: int = 256
    n_q: int = 256


@dataclass
class AssumptionWitness:
    assumption: str
    point: tuple
    quantity: str
    value: float
    slack: float
    skipped: bool = False

    def to_dict(self):
        return {
            "assumption": self.assumption,
            "point": [float(p) for p in self.point],
            "quantity": self.quantity,
            "value": float(self.value),
            "slack": float(self.slack),
            "skipped": self.skipped,
        }


@dataclass
class AssumptionReport:
    transfer: str
    verdicts: dict
    a3_sign: int
    worst_margin: float
    witnesses: list = field(default_factory=list)

    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    def to_dict(self):
        return {
            "version": 1,
            "transfer": self.transfer,
            "verdicts": dict(self.verdicts),
            "a3_sign": self.a3_sign,
            "worst_margin": float(self.worst_margin),
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _two_ended_log_grid(s0, n, margin=1e-4):
    """Points in (0, s0) clustered toward both open endpoints."""
    half = max(n // 2, 8)
    frac = np.geomspace(margin, 0.5, half)
    pts = np.concatenate([frac * s0, (1.0 - frac) * s0])
    return np.unique(pts)


def _log_abs_psi_prime(tf, x):
    return float(np.log(np.abs(tf.psi_prime(x))))


def _stencil_h(x, s0, rel=3e-3):
    # keep x +- 2h inside (0, s0); rel balances the h^4 truncation against
    # eps/h^2 rounding under the u' vs x*u'' cancellation near the ends
    return rel * min(x, s0 - x)


def a2_quantity(tf, x):
    """x * d/dx ln|psi'(x)| via a 5-point first-derivative stencil."""
    h = _stencil_h(x, tf.s0)
    u = [_log_abs_psi_prime(tf, x + k * h) for k in (-2, -1, 1, 2)]
    du = (u[0] - 8.0 * u[1] + 8.0 * u[2] - u[3]) / (12.0 * h)
    return x * du


def a2_derivative(tf, x):
    """d/dx of a2_quantity, from 5-point first and second stencils."""
    h = _stencil_h(x, tf.s0)
    um2, um1, u0, up1, up2 = (
        _log_abs_psi_prime(tf, x + k * h) for k in (-2, -1, 0, 1, 2)
    )
    du = (um2 - 8.0 * um1 + 8.0 * up1 - up2) / (12.0 * h)
    d2u = (-um2 + 16.0 * um1 - 30.0 * u0 + 16.0 * up1 - up2) / (12.0 * h * h)
    return du + x * d2u


def a4_derivative(tf, p, q, beta):
    """d/dbeta of psi(beta p)/psi(beta q) for p > q, by central difference."""
    hi = tf.s0 / max(p, q)
    h = 1e-2 * min(beta, hi - beta)
    r = lambda b: float(tf.psi(b * p) / tf.psi(b * q))
    return (r(beta + h) - r(beta - h)) / (2.0 * h)


def a5_inner(tf, x):
    """psi(x) / (x psi'(x)), the quantity whose outer derivative A5 bounds."""
    return float(tf.psi(x) / (x * tf.psi_prime(x)))


def a5_inner_derivative(tf, x):
    h = _stencil_h(x, tf.s0)
    w = [a5_inner(tf, x + k * h) for k in (-2, -1, 1, 2)]
    return (w[0] - 8.0 * w[1] + 8.0 * w[2] - w[3]) / (12.0 * h)


def a5_quantity(tf, x):
    """d/dx ( x * d/dx (psi/(x psi')) ), required nonnegative."""
    h = _stencil_h(x, tf.s0)
    wm2, wm1, w0, wp1, wp2 = (a5_inner(tf, x + k * h) for k in (-2, -1, 0, 1, 2))
    dw = (wm2 - 8.0 * wm1 + 8.0 * wp1 - wp2) / (12.0 * h)
    d2w = (-wm2 + 16.0 * wm1 - 30.0 * w0 + 16.0 * wp1 - wp2) / (12.0 * h * h)
    return dw + x * d2w


def _a3_ratio_derivative(tf, beta, qj, qn, ql, lo, hi):
    """d/dbeta of h_b(beta,qj,qn)/h_b(beta,ql,qn), h = psi'(b qj)/psi'(b qn).

    Nested finite differences; returns (value, trusted).  The h-ratio is
    analytic across the whole window (0, hi), so steps scale with the
    window and are clamped near its edges; beta-proportional steps would
    drown the weak small-beta dependence of h in rounding noise.  trusted
    is False when halving the outer step moves the estimate by more than
    30%, i.e. the value sits at the noise floor and carries no usable sign.
    """

    def h(b, qa):
        return float(tf.psi_prime(b * qa) / tf.psi_prime(b * qn))

    def h_beta(b, qa):
        hh = min(1e-3 * hi, 0.5 * (b - lo), 0.5 * (hi - b))
        return (h(b + hh, qa) - h(b - hh, qa)) / (2.0 * hh)

    def ratio(b):
        denom = h_beta(b, ql)
        if denom == 0.0 or not math.isfinite(denom):
            raise ZeroDivisionError
        return h_beta(b, qj) / denom

    h2 = min(1e-2 * hi, 0.4 * (beta - lo), 0.4 * (hi - beta))
    if h2 <= 0.0:
        return 0.0, False
    try:
        d1 = (ratio(beta + h2) - ratio(beta - h2)) / (2.0 * h2)
        d2 = (ratio(beta + 0.5 * h2) - ratio(beta - 0.5 * h2)) / h2
    except ZeroDivisionError:
        return 0.0, False
    if not (math.isfinite(d1) and math.isfinite(d2)):
        return 0.0, False
    if abs(d1 - d2) > 0.3 * max(abs(d1), abs(d2), 1e-300):
        return d1, False
    return d1, True


_MARGIN = 1e-4  # relative clearance from the open endpoints of psi's domain


def check_assumptions(tf: TransferFunction, grid_spec: GridSpec | None = None) -> AssumptionReport:
    """Audit assumptions A1..A5 on sampling grids.

    A grid audit; passing certifies nothing, failing pinpoints a violating
    witness.  Witnesses that could not be evaluated reliably are reported
    skipped and never counted toward a pass; an assumption with more than
    half its witnesses skipped fails outright.
    """
    spec = grid_spec or GridSpec()
    if min(spec.n_x, spec.n_beta, spec.n_q) < 16:
        raise ValueError("grid sizes must be >= 16")

    witnesses: list[AssumptionWitness] = []
    verdicts = {}

    def settle(name, local):
        # non-finite numbers carry no evidence either way
        for w in local:
            if not (math.isfinite(w.value) and math.isfinite(w.slack)):
                w.skipped = True
        n_skipped = sum(w.skipped for w in local)
        violated = any((not w.skipped) and w.slack < 0.0 for w in local)
        thin = n_skipped > len(local) // 2
        verdicts[name] = "fail" if (violated or thin) else "pass"
        witnesses.extend(local)

    # A1: odd, positive slope, sign-definite curvature, bounded tails
    local = []
    xs = np.geomspace(1e-4, 10.0, spec.n_x)
    for x in xs:
        odd = float(tf.phi(-x) + tf.phi(x))
        local.append(AssumptionWitness("A1", (x,), "phi(-x)+phi(x)", odd,
                                       1e-10 * (1.0 + abs(float(tf.phi(x)))) - abs(odd)))
        slope = float(tf.phi_prime(x))
        local.append(AssumptionWitness("A1", (x,), "phi'(x)", slope, slope))
        curv = float(-x * tf.phi_double_prime(x))
        local.append(AssumptionWitness("A1", (x,), "-x*phi''(x)", curv, curv))
    tail = float(tf.phi(1e6) - tf.phi(1e4))
    if math.isfinite(tail):
        local.append(AssumptionWitness("A1", (1e4, 1e6), "tail increment", tail, 1.0 - tail))
    else:
        # an overflowing tail is a definite violation, not missing evidence
        local.append(AssumptionWitness("A1", (1e4, 1e6), "tail increment", 1e308, -1e308))
    settle("A1", local)

    # A2: x (ln|psi'|)' monotone increasing on (0, s0)
    local = []
    xs = _two_ended_log_grid(tf.s0, spec.n_x, _MARGIN)
    try:
        vals = [a2_quantity(tf, x) for x in xs]
        for x, v, v_next in zip(xs, vals, vals[1:]):
            local.append(AssumptionWitness("A2", (x,), "a2_quantity step", v,
                                           (v_next - v) + 1e-9 * (1.0 + abs(v))))
    except (DomainError, FloatingPointError, ValueError):
        local.append(AssumptionWitness("A2", (), "a2_quantity", math.nan, 0.0, skipped=True))
    settle("A2", local)

    # A3: the h-ratio beta-derivative keeps one sign across all triples
    local = []
    rng = np.random.default_rng(12345)
    qgrid = np.geomspace(0.1, 10.0, spec.n_q)
    n_triples = max(16, spec.n_q // 8)
    n_betas = max(16, spec.n_beta // 16)
    signs = set()
    for _ in range(n_triples):
        i, j, k = np.sort(rng.choice(spec.n_q, size=3, replace=False))
        qj, qn, ql = float(qgrid[i]), float(qgrid[j]), float(qgrid[k])
        lo, hi = 0.0, tf.s0 / ql
        betas = np.geomspace(hi * _MARGIN, hi * (1.0 - _MARGIN), n_betas)
        for beta in betas:
            try:
                val, trusted = _a3_ratio_derivative(tf, float(beta), qj, qn, ql, lo, hi)
            except (DomainError, FloatingPointError, ValueError):
                val, trusted = math.nan, False
            if not trusted:
                local.append(AssumptionWitness("A3", (beta, qj, qn, ql),
                                               "d/dbeta h-ratio", val, 0.0, skipped=True))
                continue
            signs.add(1 if val > 0 else -1)
            local.append(AssumptionWitness("A3", (beta, qj, qn, ql),
                                           "d/dbeta h-ratio", val, abs(val)))
    if len(signs) == 1:
        a3_sign = signs.pop()
    else:
        a3_sign = 0
        if signs:  # mixed signs: every trusted witness becomes a violation
            for w in local:
                if not w.skipped:
                    w.slack = -abs(w.value)
    settle("A3", local)

    # A4: psi(beta p)/psi(beta q) decreasing in beta for p > q
    local = []
    n_pairs = max(16, spec.n_q // 16)
    n_betas = max(16, spec.n_beta // 16)
    for _ in range(n_pairs):
        i, j = np.sort(rng.choice(spec.n_q, size=2, replace=False))
        q, p = float(qgrid[i]), float(qgrid[j])
        hi = tf.s0 / p
        betas = np.geomspace(hi * _MARGIN, hi * (1.0 - _MARGIN), n_betas)
        for beta in betas:
            try:
                val = a4_derivative(tf, p, q, float(beta))
            except (DomainError, FloatingPointError, ValueError):
                local.append(AssumptionWitness("A4", (beta, p, q),
                                               "d/dbeta psi-ratio", math.nan, 0.0, skipped=True))
                continue
            local.append(AssumptionWitness("A4", (beta, p, q), "d/dbeta psi-ratio",
                                           val, -val))
    settle("A4", local)

    # A5: d/dx ( x d/dx (psi/(x psi')) ) >= 0 on (0, s0)
    local = []
    xs = _two_ended_log_grid(tf.s0, spec.n_x, _MARGIN)
    for x in xs:
        try:
            val = a5_quantity(tf, float(x))
        except (DomainError, FloatingPointError, ValueError):
            local.append(AssumptionWitness("A5", (x,), "a5_quantity", math.nan, 0.0,
                                           skipped=True))
            continue
        local.append(AssumptionWitness("A5", (x,), "a5_quantity", val,
                                       val + 1e-7 * (1.0 + abs(val))))
    settle("A5", local)

    margins = [w.slack for w in witnesses if not w.skipped]
    worst = min(margins) if margins else math.nan
    return AssumptionReport(
        transfer=tf.name,
        verdicts=verdicts,
        a3_sign=a3_sign,
        worst_margin=worst,
        witnesses=witnesses,
    )
