"""Weighted Gaussian-kernel estimation of intensity surfaces.

A marked point set ``{(X_i, Y_i)}`` with strictly positive scalar marks is
smoothed into an intensity estimate

    f(x) = (1 / (n h^d)) * sum_i Y_i K((x - X_i) / h),

where ``K`` is the standard Gaussian kernel.  With unit marks this is the
usual kernel density estimate; general marks estimate the mark-weighted
intensity ``mu(x) p(x)``.  Value, gradient and Hessian queries share one
closed form each and are exact sums over the data: no tree or binning
approximation is applied.

All query functions accumulate kernel terms in ascending data order into an
extended-precision accumulator, so repeated runs on identical inputs produce
identical floating-point output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "WeightedSample",
    "GdfModel",
    "GdfDerivatives",
    "kernel_value",
    "gdf_value",
    "gdf_gradient",
    "gdf_hessian",
    "gdf_all",
    "gdf_value_many",
    "gdf_gradient_many",
    "gdf_all_many",
    "silverman_bandwidth",
    "kernel_eval_count",
    "reset_kernel_eval_count",
]

# Kernel terms beyond ||x - X_i|| / h of about 38.6 underflow to exactly 0.0
# in IEEE double (exp(-z) == 0 for z > ~745.13).  Points further than 40
# bandwidths from all data therefore see an exact zero estimate; no other
# truncation radius is applied.
UNDERFLOW_RADIUS = 40.0

# Query batches are processed in chunks of at most this many (query, datum)
# kernel terms to bound peak memory.  Chunking never changes results: each
# query row is reduced independently.
_CHUNK_PAIRS = 2_000_000

# Diagnostic count of scalar kernel terms evaluated; not part of the
# thread-safety contract.
_EVAL_COUNT = 0


def kernel_eval_count() -> int:
    """Scalar kernel terms evaluated since the last reset (diagnostic)."""
    return _EVAL_COUNT


def reset_kernel_eval_count() -> None:
    global _EVAL_COUNT
    _EVAL_COUNT = 0


@dataclass(frozen=True)
class WeightedSample:
    """A marked point set: locations in R^d with strictly positive marks.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Sample locations.  A 1-d array is treated as n points in R^1.
    weights : array_like, shape (n,)
        Strictly positive, finite marks, one per point.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InvalidInputError("points must be a non-empty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("points contain non-finite coordinates")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.shape[0] != pts.shape[0]:
            raise InvalidInputError(
                "weights must be one-dimensional with one entry per point"
            )
        if not np.all(np.isfinite(w)):
            raise InvalidInputError("weights contain non-finite values")
        if np.any(w <= 0.0):
            bad = int(np.flatnonzero(w <= 0.0)[0])
            raise InvalidInputError(
                f"weights must be strictly positive (first offender at index {bad})"
            )
        pts = np.ascontiguousarray(pts)
        w = np.ascontiguousarray(w)
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class GdfModel:
    """A weighted sample plus smoothing bandwidth.

    Instances are immutable; queries never mutate interior state, so a model
    may be shared freely across threads.

    Parameters
    ----------
    sample : WeightedSample
    bandwidth : float
        Kernel scale h > 0.
    weight_cap : float, optional
        If given, construction fails when any mark exceeds the cap.  Useful
        when a pipeline wants to enforce bounded marks up front.
    """

    sample: WeightedSample
    bandwidth: float
    weight_cap: float | None = None

    def __post_init__(self):
        if not isinstance(self.sample, WeightedSample):
            raise InvalidInputError("sample must be a WeightedSample")
        h = float(self.bandwidth)
        if not np.isfinite(h) or h <= 0.0:
            raise InvalidInputError(f"bandwidth must be finite and > 0, got {self.bandwidth}")
        object.__setattr__(self, "bandwidth", h)
        if self.weight_cap is not None:
            cap = float(self.weight_cap)
            if not np.isfinite(cap) or cap <= 0.0:
                raise InvalidInputError("weight_cap must be finite and > 0")
            top = float(self.sample.weights.max())
            if top > cap:
                raise InvalidInputError(
                    f"largest mark {top} exceeds weight_cap {cap}"
                )
            object.__setattr__(self, "weight_cap", cap)

    @property
    def dim(self) -> int:
        return self.sample.dim

    @property
    def size(self) -> int:
        return self.sample.size


@dataclass(frozen=True)
class GdfDerivatives:
    """Value, gradient and Hessian of the estimate at one point.

    ``low_density`` is set when every kernel term underflowed, i.e. the
    point lies farther than ~40 bandwidths from all data.
    """

    value: float
    gradient: np.ndarray
    hessian: np.ndarray
    low_density: bool = False


def _norm_const(d: int) -> float:
    return float((2.0 * np.pi) ** (-0.5 * d))


def kernel_value(u) -> float:
    """Standard Gaussian kernel (2 pi)^(-d/2) exp(-||u||^2 / 2)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.ndim != 1 or u.size < 1:
        raise InvalidInputError("kernel argument must be a single vector")
    if not np.all(np.isfinite(u)):
        raise InvalidInputError("kernel argument must be finite")
    return _norm_const(u.size) * float(np.exp(-0.5 * float(u @ u)))


def _query_points(model: GdfModel, x, *, single: bool) -> np.ndarray:
    """Validate query location(s) against the model dimension."""
    q = np.asarray(x, dtype=float)
    if single:
        q = np.atleast_1d(q)
        if q.ndim != 1 or q.size != model.dim:
            raise InvalidInputError(
                f"query point must have dimension {model.dim}, got shape {q.shape}"
            )
        q = q[None, :]
    else:
        if q.ndim == 1 and model.dim == 1:
            q = q[:, None]
        if q.ndim != 2 or q.shape[1] != model.dim:
            raise InvalidInputError(
                f"query array must have shape (m, {model.dim}), got {q.shape}"
            )
    if not np.all(np.isfinite(q)):
        raise InvalidInputError("query points must be finite")
    return q


def _exp_terms(model: GdfModel, q: np.ndarray):
    """Per-pair terms Y_j exp(-||q_i - X_j||^2 / (2 h^2)) and displacements.

    Returns ``(w, diff)`` with ``w`` of shape (m, n) and ``diff = q - X`` of
    shape (m, n, d).  Term j of row i underflows to exactly 0.0 beyond
    ~38.6 bandwidths.  Increments the kernel evaluation counter by m * n.
    """
    global _EVAL_COUNT
    pts = model.sample.points
    h = model.bandwidth
    diff = q[:, None, :] - pts[None, :, :]
    z = np.einsum("mnd,mnd->mn", diff, diff)
    z /= 2.0 * h * h
    np.negative(z, out=z)
    w = np.exp(z)
    w *= model.sample.weights
    _EVAL_COUNT += w.size
    return w, diff


def _chunks(m: int, n: int):
    step = max(1, _CHUNK_PAIRS // max(1, n))
    for lo in range(0, m, step):
        yield lo, min(m, lo + step)


def gdf_value(model: GdfModel, x) -> float:
    """Intensity estimate f(x) = (1 / (n h^d)) sum_i Y_i K((x - X_i) / h)."""
    q = _query_points(model, x, single=True)
    w, _ = _exp_terms(model, q)
    s = np.sum(w[0], dtype=np.longdouble)
    n, d, h = model.size, model.dim, model.bandwidth
    return float(s * _norm_const(d) / (n * h**d))


def gdf_gradient(model: GdfModel, x) -> np.ndarray:
    """Analytic gradient (1 / (n h^(d+2))) sum_i Y_i (X_i - x) K((x - X_i) / h)."""
    q = _query_points(model, x, single=True)
    w, diff = _exp_terms(model, q)
    g = np.einsum("n,nd->d", w[0], diff[0], dtype=np.longdouble)
    n, d, h = model.size, model.dim, model.bandwidth
    return np.asarray(-g * _norm_const(d) / (n * h ** (d + 2)), dtype=float)


def gdf_hessian(model: GdfModel, x) -> np.ndarray:
    """Analytic Hessian of the estimate at ``x``.

    Equals (1 / (n h^(d+4))) sum_i ((X_i - x)(X_i - x)^T - h^2 I) Y_i K_i;
    the returned matrix is symmetric by construction.
    """
    q = _query_points(model, x, single=True)
    w, diff = _exp_terms(model, q)
    outer = np.einsum("n,nd,ne->de", w[0], diff[0], diff[0], dtype=np.longdouble)
    s = np.sum(w[0], dtype=np.longdouble)
    n, d, h = model.size, model.dim, model.bandwidth
    hess = outer - (h * h) * s * np.eye(d, dtype=np.longdouble)
    return np.asarray(hess * _norm_const(d) / (n * h ** (d + 4)), dtype=float)


def gdf_all(model: GdfModel, x) -> GdfDerivatives:
    """Value, gradient and Hessian from a single pass over the sample.

    Agrees with the separate query functions to floating-point noise while
    evaluating each kernel term once instead of three times.
    """
    q = _query_points(model, x, single=True)
    w, diff = _exp_terms(model, q)
    n, d, h = model.size, model.dim, model.bandwidth
    s = np.sum(w[0], dtype=np.longdouble)
    g = np.einsum("n,nd->d", w[0], diff[0], dtype=np.longdouble)
    outer = np.einsum("n,nd,ne->de", w[0], diff[0], diff[0], dtype=np.longdouble)
    c = _norm_const(d)
    value = float(s * c / (n * h**d))
    grad = np.asarray(-g * c / (n * h ** (d + 2)), dtype=float)
    hess = np.asarray(
        (outer - (h * h) * s * np.eye(d, dtype=np.longdouble)) * c / (n * h ** (d + 4)),
        dtype=float,
    )
    return GdfDerivatives(value, grad, hess, low_density=(float(s) == 0.0))


def gdf_value_many(model: GdfModel, xs) -> np.ndarray:
    """Vectorized ``gdf_value`` over an (m, d) array of query points."""
    q = _query_points(model, xs, single=False)
    n, d, h = model.size, model.dim, model.bandwidth
    scale = _norm_const(d) / (n * h**d)
    out = np.empty(q.shape[0])
    for lo, hi in _chunks(q.shape[0], n):
        w, _ = _exp_terms(model, q[lo:hi])
        out[lo:hi] = np.sum(w, axis=1, dtype=np.longdouble) * scale
    return out


def gdf_gradient_many(model: GdfModel, xs) -> np.ndarray:
    """Vectorized ``gdf_gradient`` over an (m, d) array of query points."""
    q = _query_points(model, xs, single=False)
    n, d, h = model.size, model.dim, model.bandwidth
    scale = _norm_const(d) / (n * h ** (d + 2))
    out = np.empty_like(q)
    for lo, hi in _chunks(q.shape[0], n):
        w, diff = _exp_terms(model, q[lo:hi])
        g = np.einsum("mn,mnd->md", w, diff, dtype=np.longdouble)
        out[lo:hi] = np.asarray(-g * scale, dtype=float)
    return out


def gdf_all_many(model: GdfModel, xs):
    """Vectorized single-pass value/gradient/Hessian queries.

    Returns ``(values, gradients, hessians)`` with shapes (m,), (m, d) and
    (m, d, d).
    """
    q = _query_points(model, xs, single=False)
    n, d, h = model.size, model.dim, model.bandwidth
    c = _norm_const(d)
    values = np.empty(q.shape[0])
    grads = np.empty_like(q)
    hessians = np.empty((q.shape[0], d, d))
    eye = np.eye(d, dtype=np.longdouble)
    for lo, hi in _chunks(q.shape[0], n):
        w, diff = _exp_terms(model, q[lo:hi])
        s = np.sum(w, axis=1, dtype=np.longdouble)
        g = np.einsum("mn,mnd->md", w, diff, dtype=np.longdouble)
        outer = np.einsum("mn,mnd,mne->mde", w, diff, diff, dtype=np.longdouble)
        values[lo:hi] = s * (c / (n * h**d))
        grads[lo:hi] = np.asarray(-g * (c / (n * h ** (d + 2))), dtype=float)
        hessians[lo:hi] = np.asarray(
            (outer - (h * h) * s[:, None, None] * eye) * (c / (n * h ** (d + 4))),
            dtype=float,
        )
    return values, grads, hessians


def silverman_bandwidth(sample: WeightedSample) -> float:
    """Rule-of-thumb bandwidth; a heuristic starting point only.

    Uses the Gaussian reference rule h = sigma * (4 / (d + 2))^(1/(d+4)) *
    n^(-1/(d+4)) with sigma the mean per-coordinate standard deviation.
    Marks are ignored: the rule looks at location spread only, and nothing
    about it adapts to multimodal or anisotropic data.  Treat the result as
    an initial guess to refine, not a tuned choice.
    """
    if not isinstance(sample, WeightedSample):
        raise InvalidInputError("sample must be a WeightedSample")
    n, d = sample.size, sample.dim
    if n < 2:
        raise InvalidInputError("bandwidth rule needs at least two points")
    sigma = float(np.mean(np.std(sample.points, axis=0, ddof=1)))
    if sigma <= 0.0:
        raise InvalidInputError("sample has zero spread; choose a bandwidth explicitly")
    return sigma * (4.0 / (d + 2.0)) ** (1.0 / (d + 4.0)) * n ** (-1.0 / (d + 4.0))
