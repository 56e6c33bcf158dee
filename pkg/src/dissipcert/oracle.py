"""Brute-force verification of hyperplane maxima.

Independent of the solver's critical-point machinery: the hyperplane is
parameterized by an orthonormal tangent basis, f is evaluated on a dense
grid, grid-local maxima (strictly above all 3^(n-1)-1 neighbors) are
refined by projected ascent and deduplicated.  Marks on the search-box
edge are counted separately as boundary hits, never as maxima.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConvergenceFailure, UnsupportedDimension
from .hyperplane import RawProblem, objective_value

__all__ = ["OracleResult", "grid_local_maxima", "projected_ascent", "export_grid_csv"]

_GRAD_TOL = 1e-9
_MAX_ITERS = 10_000
_TIE_TOL = 1e-12


@dataclass
class OracleResult:
    maxima: list            # (x, f(x)) pairs
    resolution: float
    box_radius: float
    boundary_hits: int

    def to_dict(self):
        return {
            "maxima": [
                {"x": [float(v) for v in x], "f": float(fx)} for x, fx in self.maxima
            ],
            "resolution": float(self.resolution),
            "box_radius": float(self.box_radius),
            "boundary_hits": self.boundary_hits,
        }


def _tangent_basis(l):
    """Orthonormal basis of the tangent space {y : l.y = 0}, deterministic."""
    l = np.asarray(l, dtype=float)
    n = l.size
    unit = l / np.linalg.norm(l)
    _, _, vt = np.linalg.svd(unit.reshape(1, n))
    return vt[1:].T  # n x (n-1)


def _hyperplane_center(l, b):
    l = np.asarray(l, dtype=float)
    return (b / float(np.dot(l, l))) * l


def _gradient(p, x):
    return p.c * np.asarray(p.tf.phi_prime(x), dtype=float)


def projected_ascent(p: RawProblem, x_start):
    """Ascend f along the hyperplane until the tangent gradient vanishes.

    Backtracking steps, Newton acceleration while the tangent Hessian is
    negative definite.  Iterates are re-projected onto the plane every
    step.  Unbounded problems make the iterate escape along the plane
    while the gradient decays, so exceeding a travel budget (or the
    iteration cap) raises ConvergenceFailure carrying the last iterate.
    """
    x = np.asarray(x_start, dtype=float).copy()
    l = p.l
    ll = float(np.dot(l, l))
    if abs(float(np.dot(l, x)) - p.b) > 1e-8 * (1.0 + abs(p.b)):
        raise ValueError("start point is off the hyperplane")
    basis = _tangent_basis(l)
    travel_limit = 10.0 * (1.0 + float(np.linalg.norm(x)))

    def reproject(z):
        return z + ((p.b - float(np.dot(l, z))) / ll) * l

    x = reproject(x)
    fx = objective_value(p.tf, p.c, x)
    for _ in range(_MAX_ITERS):
        if float(np.linalg.norm(x - x_start)) > travel_limit:
            raise ConvergenceFailure("iterate escaped along the plane",
                                     last_iterate=x)
        grad = _gradient(p, x)
        gt = basis.T @ grad
        if float(np.linalg.norm(gt)) < _GRAD_TOL:
            return x
        step_dir = None
        curv = p.c * np.asarray(p.tf.phi_double_prime(x), dtype=float)
        hess_t = basis.T @ (curv[:, None] * basis)
        try:
            eigs = np.linalg.eigvalsh(0.5 * (hess_t + hess_t.T))
            if np.max(eigs) < -1e-14:
                delta = np.linalg.solve(hess_t, -gt)
                if float(np.linalg.norm(delta)) <= 1.0:
                    step_dir = basis @ delta
        except np.linalg.LinAlgError:
            step_dir = None
        if step_dir is None:
            step_dir = basis @ gt
        step = 1.0
        moved = False
        for _ in range(60):
            x_new = reproject(x + step * step_dir)
            f_new = objective_value(p.tf, p.c, x_new)
            if f_new > fx:
                x, fx = x_new, f_new
                moved = True
                break
            step *= 0.5
        if not moved:
            # flat to machine precision along every tried step
            if float(np.linalg.norm(gt)) < 1e-6:
                return x
            raise ConvergenceFailure("ascent stalled with a nonzero tangent gradient",
                                     last_iterate=x)
    raise ConvergenceFailure("projected ascent hit the iteration cap", last_iterate=x)


def grid_local_maxima(p: RawProblem, box_radius: float, steps_per_axis: int) -> OracleResult:
    """Enumerate local maxima of f on a hyperplane patch by dense search."""
    n = p.c.size
    if n > 4:
        raise UnsupportedDimension(f"grid oracle supports n <= 4, got {n}")
    if steps_per_axis < 64:
        raise ValueError("steps_per_axis must be >= 64")
    dim = n - 1
    center = _hyperplane_center(p.l, p.b)
    basis = _tangent_basis(p.l)
    if box_radius <= 0.0:
        return OracleResult([], 0.0, float(box_radius), 0)
    axis = np.linspace(-box_radius, box_radius, steps_per_axis)
    resolution = axis[1] - axis[0]

    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)  # (cells, dim)
    points = center[None, :] + coords @ basis.T
    values = np.asarray(p.tf.phi(points), dtype=float) @ p.c
    values = values.reshape([steps_per_axis] * dim)

    padded = np.full([steps_per_axis + 2] * dim, -np.inf)
    padded[(slice(1, -1),) * dim] = values
    mask = np.ones_like(values, dtype=bool)
    for shift in product((-1, 0, 1), repeat=dim):
        if all(s == 0 for s in shift):
            continue
        sl = tuple(slice(1 + s, 1 + s + steps_per_axis) for s in shift)
        mask &= values > padded[sl] + _TIE_TOL
    idx = np.argwhere(mask)

    on_edge = np.any((idx == 0) | (idx == steps_per_axis - 1), axis=1)
    boundary_hits = int(np.sum(on_edge))
    interior_idx = idx[~on_edge]

    refined = []
    for cell in interior_idx:
        t = np.array([axis[i] for i in cell])
        x0 = center + basis @ t
        try:
            x_star = projected_ascent(p, x0)
        except ConvergenceFailure:
            continue
        t_star = basis.T @ (x_star - center)
        if np.max(np.abs(t_star)) > box_radius:
            continue
        refined.append(x_star)

    # dedupe, keeping the highest value per cluster
    maxima = []
    for x_star in refined:
        fx = objective_value(p.tf, p.c, x_star)
        merged = False
        for i, (kept, fk) in enumerate(maxima):
            if float(np.linalg.norm(kept - x_star)) <= 3.0 * resolution:
                if fx > fk:
                    maxima[i] = (x_star, fx)
                merged = True
                break
        if not merged:
            maxima.append((x_star, fx))
    maxima.sort(key=lambda pair: tuple(pair[0]))
    return OracleResult(maxima, float(resolution), float(box_radius), boundary_hits)


def export_grid_csv(p: RawProblem, box_radius, steps_per_axis, fileobj):
    """Stream (cell center, f value, is_max) rows for external plotting."""
    result = grid_local_maxima(p, box_radius, steps_per_axis)
    centers = [x for x, _ in result.maxima]
    n = p.c.size
    dim = n - 1
    center = _hyperplane_center(p.l, p.b)
    basis = _tangent_basis(p.l)
    axis = np.linspace(-box_radius, box_radius, steps_per_axis)
    writer = csv.writer(fileobj)
    writer.writerow([f"x{i}" for i in range(n)] + ["f", "is_max"])
    for coord in product(axis, repeat=dim):
        x = center + basis @ np.asarray(coord)
        fx = objective_value(p.tf, p.c, x)
        near = any(
            float(np.linalg.norm(x - m)) <= 1.5 * result.resolution for m in centers
        )
        writer.writerow([f"{v:.17g}" for v in x] + [f"{fx:.17g}", int(near)])
    return result
