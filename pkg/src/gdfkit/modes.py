"""Weighted mean-shift ascent to intensity modes.

Each step replaces a point by the kernel-weighted average of the sample,

    x  <-  sum_i Y_i X_i K((x - X_i) / h) / sum_i Y_i K((x - X_i) / h),

which moves along the estimate's gradient and never decreases the estimate.
Trajectories from many seeds are iterated until the step length drops below
``step_tol * h``, then endpoints are merged into distinct modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import core
from .core import GdfModel
from .errors import EmptyResultError, InvalidInputError, LowDensityError

__all__ = [
    "AscentConfig",
    "Trajectory",
    "ModeSet",
    "mean_shift_step",
    "ascend",
    "collect_modes",
]

REASON_CONVERGED = "step_tolerance"
REASON_MAX_ITERS = "max_iters"
REASON_LOW_DENSITY = "low_density"

# A step's denominator at or below this is treated as total kernel underflow.
_DENOM_FLOOR = float(np.finfo(float).tiny)

# Candidate modes whose top Hessian eigenvalue is above -SADDLE_SLACK times
# the spectral scale are rejected as saddles / degenerate critical points.
SADDLE_SLACK = 1e-12


@dataclass(frozen=True)
class AscentConfig:
    """Stopping and merging parameters for mean-shift ascent.

    ``step_tol`` is relative to the bandwidth: iteration stops once a step is
    shorter than ``step_tol * h``.  ``merge_radius`` is likewise in bandwidth
    units and controls endpoint deduplication.
    """

    step_tol: float = 1e-7
    max_iters: int = 500
    merge_radius: float = 0.5

    def __post_init__(self):
        if not (np.isfinite(self.step_tol) and self.step_tol > 0.0):
            raise InvalidInputError("step_tol must be finite and > 0")
        if int(self.max_iters) < 1:
            raise InvalidInputError("max_iters must be >= 1")
        object.__setattr__(self, "max_iters", int(self.max_iters))
        if not (np.isfinite(self.merge_radius) and self.merge_radius > 0.0):
            raise InvalidInputError("merge_radius must be finite and > 0")


@dataclass(frozen=True)
class Trajectory:
    """One ascent path: visited points, estimate values, and how it ended."""

    points: np.ndarray
    values: np.ndarray
    converged: bool
    reason: str


@dataclass(frozen=True)
class ModeSet:
    """Distinct retained modes with diagnostics.

    ``top_eigenvalues`` holds the largest Hessian eigenvalue at each mode
    (negative for a genuine local maximum); ``basin_counts`` tallies how many
    converged seeds merged into each mode.
    """

    modes: np.ndarray
    values: np.ndarray
    top_eigenvalues: np.ndarray
    basin_counts: np.ndarray

    def __len__(self) -> int:
        return self.modes.shape[0]


@dataclass
class _BatchAscent:
    endpoints: np.ndarray
    values: np.ndarray
    converged: np.ndarray
    reasons: list
    n_steps: np.ndarray
    history: list | None = None
    value_history: np.ndarray | None = None


def _seed_array(model: GdfModel, seeds) -> np.ndarray:
    s = np.asarray(seeds, dtype=float)
    if s.ndim == 1 and model.dim == 1:
        s = s[:, None]
    if s.ndim != 2 or s.shape[1] != model.dim or s.shape[0] < 1:
        raise InvalidInputError(
            f"seeds must be a non-empty (m, {model.dim}) array, got shape {s.shape}"
        )
    if not np.all(np.isfinite(s)):
        raise InvalidInputError("seeds must be finite")
    return s.copy()


def _step_rows(model: GdfModel, q: np.ndarray):
    """One mean-shift update for each row of ``q``.

    Returns ``(targets, sums)`` where ``sums`` are the raw kernel-weight
    denominators (no normalizing constant).  Rows whose denominator
    underflows keep their input position and report a zero sum.
    """
    pts = model.sample.points
    out = np.empty_like(q)
    sums = np.empty(q.shape[0])
    for lo, hi in core._chunks(q.shape[0], model.size):
        w, _ = core._exp_terms(model, q[lo:hi])
        s = w.sum(axis=1)
        sums[lo:hi] = s
        safe = np.where(s > _DENOM_FLOOR, s, 1.0)
        out[lo:hi] = np.where(
            (s > _DENOM_FLOOR)[:, None], (w @ pts) / safe[:, None], q[lo:hi]
        )
    return out, sums


def _ascend_batch(model: GdfModel, seeds, cfg: AscentConfig, record: bool = False) -> _BatchAscent:
    """Iterate all seeds in lockstep until each converges, fails, or times out."""
    cur = _seed_array(model, seeds)
    m = cur.shape[0]
    n, d, h = model.size, model.dim, model.bandwidth
    value_scale = core._norm_const(d) / (n * h**d)
    tol = cfg.step_tol * h

    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)
    reasons = [REASON_MAX_ITERS] * m
    n_steps = np.zeros(m, dtype=int)
    history = [cur.copy()] if record else None
    value_history = np.full((cfg.max_iters + 1, m), np.nan) if record else None

    for _ in range(cfg.max_iters):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        nxt, sums = _step_rows(model, cur[idx])
        if record:
            value_history[n_steps[idx], idx] = sums * value_scale
        dead = sums <= _DENOM_FLOOR
        if np.any(dead):
            for i in idx[dead]:
                reasons[i] = REASON_LOW_DENSITY
            active[idx[dead]] = False
        live = idx[~dead]
        if live.size:
            moved = nxt[~dead]
            sizes = np.linalg.norm(moved - cur[live], axis=1)
            cur[live] = moved
            n_steps[live] += 1
            done = sizes < tol
            if np.any(done):
                hit = live[done]
                converged[hit] = True
                for i in hit:
                    reasons[i] = REASON_CONVERGED
                active[hit] = False
        if record:
            history.append(cur.copy())

    values = core.gdf_value_many(model, cur)
    if record:
        value_history[n_steps, np.arange(m)] = values
    return _BatchAscent(cur, values, converged, reasons, n_steps, history, value_history)


def mean_shift_step(model: GdfModel, x) -> np.ndarray:
    """One weighted mean-shift update from ``x``.

    The result is a convex combination of sample points, hence stays inside
    their convex hull.  Scaling every mark by a common positive constant
    leaves the update unchanged.
    """
    q = core._query_points(model, x, single=True)
    target, sums = _step_rows(model, q)
    if sums[0] <= _DENOM_FLOOR:
        raise LowDensityError(
            "mean-shift step undefined: all kernel terms underflowed at the query point"
        )
    return target[0]


def ascend(model: GdfModel, x0, cfg: AscentConfig | None = None) -> Trajectory:
    """Run mean-shift ascent from a single seed and record the full path.

    The recorded estimate values are non-decreasing along the path (up to
    floating-point noise).  A seed in a region of total kernel underflow
    yields ``converged=False`` with reason ``"low_density"``.
    """
    cfg = cfg or AscentConfig()
    q = core._query_points(model, x0, single=True)
    res = _ascend_batch(model, q, cfg, record=True)
    t = int(res.n_steps[0])
    pts = np.asarray([snap[0] for snap in res.history[: t + 1]])
    vals = res.value_history[: t + 1, 0].copy()
    return Trajectory(pts, vals, bool(res.converged[0]), res.reasons[0])


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _merge_endpoints(endpoints: np.ndarray, values: np.ndarray, seed_order: np.ndarray, radius: float):
    """Group endpoints whose mutual distance is within ``radius``.

    Converged endpoints cluster many orders of magnitude tighter than the
    merge radius, so they are first collapsed onto a grid of cell size
    radius/1024 and the within-radius graph is built on one representative
    per cell.  Returns (component id per endpoint, representative endpoint
    index per component).
    """
    quant = np.floor(endpoints / (radius / 1024.0)).astype(np.int64)
    cells, inverse = np.unique(quant, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    n_cells = cells.shape[0]

    # Best endpoint per cell: highest value, ties broken by lowest seed index.
    order = np.lexsort((seed_order, -values))
    cell_rep = np.full(n_cells, -1, dtype=int)
    for i in order:
        c = inverse[i]
        if cell_rep[c] < 0:
            cell_rep[c] = i
    rep_pos = endpoints[cell_rep]

    uf = _UnionFind(n_cells)
    if n_cells > 1:
        pairs = cKDTree(rep_pos).query_pairs(radius, output_type="ndarray")
        for a, b in pairs:
            uf.union(int(a), int(b))
    roots = np.asarray([uf.find(c) for c in range(n_cells)])
    root_ids = {r: i for i, r in enumerate(sorted(set(roots.tolist())))}
    comp_of_cell = np.asarray([root_ids[r] for r in roots])
    comp = comp_of_cell[inverse]

    n_comp = len(root_ids)
    comp_rep = np.full(n_comp, -1, dtype=int)
    for i in order:
        c = comp[i]
        if comp_rep[c] < 0:
            comp_rep[c] = i
    return comp, comp_rep


def _collect(model: GdfModel, seeds, cfg: AscentConfig):
    """Shared mode-finding engine.

    Returns ``(ModeSet, labels, reasons)`` where ``labels[i]`` is the index
    of the retained mode seed ``i`` converged to, or -1 for seeds whose
    trajectory failed or whose candidate was rejected.
    """
    res = _ascend_batch(model, seeds, cfg)
    m = res.endpoints.shape[0]
    conv = np.flatnonzero(res.converged)
    if conv.size == 0:
        counts = {r: res.reasons.count(r) for r in set(res.reasons)}
        raise EmptyResultError(f"no mean-shift trajectory converged (reasons: {counts})")

    radius = cfg.merge_radius * model.bandwidth
    comp, comp_rep = _merge_endpoints(
        res.endpoints[conv], res.values[conv], conv, radius
    )
    rep_global = conv[comp_rep]

    # Saddle rejection at each candidate representative.
    _, _, hessians = core.gdf_all_many(model, res.endpoints[rep_global])
    eigvals = np.linalg.eigvalsh(hessians)
    top = eigvals[:, -1]
    scale = np.abs(eigvals).max(axis=1)
    keep = top < -SADDLE_SLACK * scale

    if not np.any(keep):
        raise EmptyResultError(
            "every mode candidate was rejected as a saddle or degenerate point"
        )

    kept = np.flatnonzero(keep)
    rep_vals = res.values[rep_global[kept]]
    # Deterministic output order: strongest mode first, seed index breaks ties.
    out_order = kept[np.lexsort((rep_global[kept], -rep_vals))]
    mode_of_comp = np.full(comp_rep.shape[0], -1, dtype=int)
    mode_of_comp[out_order] = np.arange(out_order.size)

    labels = np.full(m, -1, dtype=int)
    labels[conv] = mode_of_comp[comp]
    basin = np.bincount(labels[labels >= 0], minlength=out_order.size)

    ridx = rep_global[out_order]
    modeset = ModeSet(
        modes=res.endpoints[ridx].copy(),
        values=res.values[ridx].copy(),
        top_eigenvalues=top[out_order].copy(),
        basin_counts=basin,
    )
    return modeset, labels, res.reasons


def collect_modes(model: GdfModel, seeds=None, cfg: AscentConfig | None = None) -> ModeSet:
    """Find distinct modes by ascending from every seed and merging endpoints.

    ``seeds`` defaults to the sample points.  Endpoints within
    ``merge_radius * h`` of one another are merged (connected components of
    the within-radius graph); each component is represented by its
    highest-value endpoint and rejected if that point is a saddle or if its
    trajectory failed.  Retained modes are pairwise farther apart than the
    merge radius.
    """
    cfg = cfg or AscentConfig()
    if seeds is None:
        seeds = model.sample.points
    modeset, _, _ = _collect(model, seeds, cfg)
    return modeset
