"""Density-ridge tracing by subspace-constrained mean shift.

A ridge point is one where the gradient, projected onto the Hessian's
trailing eigenvectors, vanishes while the second eigenvalue is negative.
Each iteration projects the mean-shift displacement onto the span of the
trailing ``d - 1`` eigenvectors, so points slide onto one-dimensional
filaments instead of collapsing into modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core, modes
from .core import GdfModel
from .errors import (
    EmptyResultError,
    InvalidInputError,
    LowDensityError,
    NumericError,
    UnsupportedDimensionError,
)

__all__ = ["EigenFrame", "RidgePointSet", "eigen_frame", "scms_step", "trace_ridge"]

# Below this relative eigengap the leading two eigenvectors are numerically
# interchangeable; the point is flagged and excluded from retained output.
DEGENERATE_GAP = 1e-10

# Default projected-gradient acceptance is this fraction of the largest seed
# gradient norm.
RIDGE_TOL_FRACTION = 1e-6

REASON_RETAINED = "retained"
REASON_NOT_CONVERGED = "not_converged"
REASON_LOW_DENSITY = "low_density"
REASON_BELOW_FLOOR = "below_density_floor"
REASON_POSITIVE_CURVATURE = "second_eigenvalue_not_negative"
REASON_GRADIENT = "projected_gradient_above_tol"
REASON_DEGENERATE = "degenerate_eigengap"


@dataclass(frozen=True)
class EigenFrame:
    """Descending Hessian eigenvalues and the trailing eigenvector basis.

    ``basis`` has shape (d, d-1): columns are the eigenvectors of the second
    through last eigenvalues, each with a fixed sign convention.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray


@dataclass(frozen=True)
class RidgePointSet:
    """Retained ridge points plus the diagnostics used to accept them."""

    points: np.ndarray
    projected_grad_norms: np.ndarray
    second_eigenvalues: np.ndarray
    values: np.ndarray

    def __len__(self) -> int:
        return self.points.shape[0]


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip eigenvector signs so each column's largest-magnitude entry is positive.

    Ties pick the first such entry, making the convention deterministic.
    """
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0.0] = 1.0
    return vecs * signs


def eigen_frame(hessian) -> EigenFrame:
    """Eigendecompose a symmetric Hessian into a descending frame.

    Raises ``UnsupportedDimensionError`` for 1x1 input: there is no trailing
    subspace in one dimension.
    """
    H = np.asarray(hessian, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise InvalidInputError(f"hessian must be square, got shape {H.shape}")
    if H.shape[0] < 2:
        raise UnsupportedDimensionError("ridges are undefined for 1-dimensional data")
    if not np.all(np.isfinite(H)):
        raise InvalidInputError("hessian contains non-finite entries")
    scale = float(np.abs(H).max())
    if scale > 0.0 and float(np.abs(H - H.T).max()) > 1e-8 * scale:
        raise InvalidInputError("hessian must be symmetric")
    try:
        vals, vecs = np.linalg.eigh(0.5 * (H + H.T))
    except np.linalg.LinAlgError as e:
        raise NumericError(f"eigendecomposition failed: {e}") from e
    vals = vals[::-1]
    vecs = _fix_signs(vecs[:, ::-1])
    return EigenFrame(eigenvalues=vals, basis=vecs[:, 1:].copy())


def _project_steps(hessians: np.ndarray, shifts: np.ndarray):
    """Project mean-shift displacements onto each trailing eigenspace.

    Returns ``(steps, eigvals)`` for a stack of Hessians; ``eigvals`` are
    ascending as returned by the solver.
    """
    try:
        vals, vecs = np.linalg.eigh(hessians)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"eigendecomposition failed during ridge tracing: {e}") from e
    V = vecs[:, :, :-1]  # ascending order: all but the leading eigenvector
    coeff = np.einsum("mdk,md->mk", V, shifts)
    return np.einsum("mdk,mk->md", V, coeff), vals


def scms_step(model: GdfModel, x) -> np.ndarray:
    """One subspace-constrained mean-shift update from ``x``.

    The mean-shift displacement is computed, then projected onto the span of
    the trailing ``d - 1`` Hessian eigenvectors at ``x``.  At a mode the
    displacement is already negligible, so modes are fixed points.
    """
    if model.dim < 2:
        raise UnsupportedDimensionError("ridge stepping needs dimension >= 2")
    q = core._query_points(model, x, single=True)
    target, sums = modes._step_rows(model, q)
    if sums[0] <= modes._DENOM_FLOOR:
        raise LowDensityError(
            "ridge step undefined: all kernel terms underflowed at the query point"
        )
    hess = core.gdf_hessian(model, q[0])
    steps, _ = _project_steps(hess[None, :, :], (target - q)[:1])
    return q[0] + steps[0]


def _trace_batch(model: GdfModel, seeds: np.ndarray, cfg: modes.AscentConfig):
    """Iterate SCMS on all seeds, freezing each as it converges or fails."""
    cur = seeds.copy()
    m = cur.shape[0]
    tol = cfg.step_tol * model.bandwidth
    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    low_density = np.zeros(m, dtype=bool)

    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        for lo, hi in core._chunks(idx.size, model.size * model.dim):
            rows = idx[lo:hi]
            w, diff = core._exp_terms(model, cur[rows])
            sums = w.sum(axis=1)
            dead = sums <= modes._DENOM_FLOOR
            if np.any(dead):
                low_density[rows[dead]] = True
                active[rows[dead]] = False
            live = rows[~dead]
            if live.size == 0:
                continue
            wl, diffl = w[~dead], diff[~dead]
            sl = sums[~dead]
            shift = (wl @ model.sample.points) / sl[:, None] - cur[live]
            # Hessian up to a common positive factor; eigenvectors unchanged.
            hess = np.einsum("mn,mnd,mne->mde", wl, diffl, diffl)
            hess -= (model.bandwidth**2 * sl)[:, None, None] * np.eye(model.dim)
            steps, _ = _project_steps(hess, shift)
            cur[live] += steps
            done = np.linalg.norm(steps, axis=1) < tol
            if np.any(done):
                converged[live[done]] = True
                active[live[done]] = False
    return cur, converged, low_density


def trace_ridge(
    model: GdfModel,
    seeds,
    cfg: modes.AscentConfig | None = None,
    density_floor: float = 0.0,
    ridge_tol: float | None = None,
) -> RidgePointSet:
    """Trace ridge points from ``seeds`` and keep the ones that qualify.

    A converged endpoint is retained when its estimate value is at least
    ``density_floor``, its second Hessian eigenvalue is negative, its
    leading eigengap is not degenerate, and its projected gradient norm is
    within ``ridge_tol``.  ``ridge_tol`` defaults to 1e-6 times the larger
    of the seeds' gradient norms and their value/bandwidth ratio (the
    field's own gradient scale), so seeding at stationary points does not
    collapse the tolerance to zero.

    Raises ``EmptyResultError`` (with a per-seed reason tally) when nothing
    qualifies.
    """
    if model.dim < 2:
        raise UnsupportedDimensionError("ridge tracing needs dimension >= 2")
    cfg = cfg or modes.AscentConfig()
    seed_arr = modes._seed_array(model, seeds)
    if not (np.isfinite(density_floor) and density_floor >= 0.0):
        raise InvalidInputError("density_floor must be finite and >= 0")

    if ridge_tol is None:
        seed_vals, seed_grads, _ = core.gdf_all_many(model, seed_arr)
        grad_scale = max(
            float(np.linalg.norm(seed_grads, axis=1).max()),
            float(seed_vals.max()) / model.bandwidth,
        )
        ridge_tol = RIDGE_TOL_FRACTION * grad_scale
    if not (np.isfinite(ridge_tol) and ridge_tol >= 0.0):
        raise InvalidInputError("ridge_tol must be finite and >= 0")

    endpoints, converged, low_density = _trace_batch(model, seed_arr, cfg)

    values, grads, hessians = core.gdf_all_many(model, endpoints)
    eigvals, eigvecs = np.linalg.eigh(hessians)
    lam1 = eigvals[:, -1]
    lam2 = eigvals[:, -2]
    gap_scale = np.abs(eigvals).max(axis=1)
    degenerate = (lam1 - lam2) < DEGENERATE_GAP * gap_scale
    V = eigvecs[:, :, :-1]
    coeff = np.einsum("mdk,md->mk", V, grads)
    proj = np.einsum("mdk,mk->md", V, coeff)
    pnorm = np.linalg.norm(proj, axis=1)

    reasons = np.full(seed_arr.shape[0], REASON_RETAINED, dtype=object)
    reasons[~converged] = REASON_NOT_CONVERGED
    reasons[low_density] = REASON_LOW_DENSITY
    ok = converged.copy()
    mask = ok & (values < density_floor)
    reasons[mask] = REASON_BELOW_FLOOR
    ok &= values >= density_floor
    mask = ok & (lam2 >= 0.0)
    reasons[mask] = REASON_POSITIVE_CURVATURE
    ok &= lam2 < 0.0
    # without a clear eigengap the trailing subspace (and with it the
    # projected-gradient test) is not well defined, so check that first
    mask = ok & degenerate
    reasons[mask] = REASON_DEGENERATE
    ok &= ~degenerate
    mask = ok & (pnorm > ridge_tol)
    reasons[mask] = REASON_GRADIENT
    ok &= pnorm <= ridge_tol

    if not np.any(ok):
        tally = {r: int(np.sum(reasons == r)) for r in set(reasons.tolist())}
        raise EmptyResultError(f"no ridge point qualified (seed outcomes: {tally})")

    return RidgePointSet(
        points=endpoints[ok].copy(),
        projected_grad_norms=pnorm[ok].copy(),
        second_eigenvalues=lam2[ok].copy(),
        values=values[ok].copy(),
    )
