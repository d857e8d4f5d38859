"""Cluster connectivity through an absorbing random walk on the sample.

Every sample point becomes a transient state that hops toward data points or
is captured by mode states, with transition scores proportional to
mark-weighted kernel affinities.  Absorption probabilities then say how much
of each cluster's mass leaks into other clusters' modes, which is summarized
as a symmetric connectivity matrix with zero diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core
from .clustering import ClusterAssignment
from .core import GdfModel, WeightedSample
from .errors import InvalidInputError, NumericError
from .modes import ModeSet

__all__ = [
    "ChainBlocks",
    "ConnectivityResult",
    "mode_weight",
    "build_chain",
    "absorb",
    "connectivity_matrix",
    "connectivity_pipeline",
]

# Chains are dense (n + k)-state objects; refuse to build beyond this size.
DEFAULT_MAX_POINTS = 10_000

_ROW_SUM_TOL = 1e-8


@dataclass(frozen=True)
class ChainBlocks:
    """Transition blocks of the absorbing chain.

    ``S`` (n, k) holds data-to-mode probabilities, ``T`` (n, n) data-to-data;
    each row of [S | T] sums to one.  ``mode_weights`` are the imputed marks
    of the absorbing mode states.
    """

    S: np.ndarray
    T: np.ndarray
    mode_weights: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        T = np.asarray(self.T, dtype=float)
        if S.ndim != 2 or T.ndim != 2 or T.shape[0] != T.shape[1] or S.shape[0] != T.shape[0]:
            raise InvalidInputError("chain blocks must be S (n, k) and T (n, n)")
        if np.any(S < 0.0) or np.any(T < 0.0):
            raise InvalidInputError("transition scores must be non-negative")
        rows = S.sum(axis=1) + T.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > 1e-12):
            raise InvalidInputError("each chain row must sum to 1 (within 1e-12)")
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "mode_weights", np.asarray(self.mode_weights, dtype=float))


@dataclass(frozen=True)
class ConnectivityResult:
    """Absorption probabilities A (n, k) and the k x k connectivity matrix."""

    A: np.ndarray
    omega: np.ndarray


def mode_weight(model: GdfModel, mode) -> float:
    """Imputed mark of a mode: local mark average under the kernel.

    Computed as the ratio of the weighted to the unweighted kernel sum at the
    mode location, i.e. the kernel-smoothed conditional mean mark.
    """
    q = core._query_points(model, mode, single=True)
    diff = q[0][None, :] - model.sample.points
    z = np.einsum("nd,nd->n", diff, diff) / (2.0 * model.bandwidth**2)
    e = np.exp(-z)
    denom = np.sum(e, dtype=np.longdouble)
    if float(denom) <= 0.0:
        raise NumericError(
            "mode weight undefined: unweighted kernel sum underflowed at the mode"
        )
    return float(np.sum(e * model.sample.weights, dtype=np.longdouble) / denom)


def _mode_weights(model: GdfModel, mode_pts: np.ndarray) -> np.ndarray:
    out = np.empty(mode_pts.shape[0])
    for j in range(mode_pts.shape[0]):
        out[j] = mode_weight(model, mode_pts[j])
    return out


def build_chain(
    model: GdfModel, modeset: ModeSet, max_points: int = DEFAULT_MAX_POINTS
) -> ChainBlocks:
    """Assemble the absorbing chain over sample points and modes.

    From data point X_i the unnormalized score toward data point X_j
    (including j = i) is Y_j K((X_i - X_j) / h) and toward mode M_j it is
    W_j K((X_i - M_j) / h); one common row total normalizes both blocks, so
    each row of [S | T] is a probability vector.
    """
    if len(modeset) < 1:
        raise InvalidInputError("modeset must contain at least one mode")
    n = model.size
    if n > max_points:
        raise InvalidInputError(
            f"chain would have {n} transient states, above the cap {max_points}; "
            "subsample the data or raise max_points explicitly"
        )
    W = _mode_weights(model, modeset.modes)

    pts = model.sample.points
    T = np.empty((n, n))
    S = np.empty((n, len(modeset)))
    for lo, hi in core._chunks(n, n):
        w, _ = core._exp_terms(model, pts[lo:hi])
        T[lo:hi] = w
    for lo, hi in core._chunks(n, len(modeset)):
        q = pts[lo:hi]
        diff = q[:, None, :] - modeset.modes[None, :, :]
        z = np.einsum("mkd,mkd->mk", diff, diff) / (2.0 * model.bandwidth**2)
        S[lo:hi] = np.exp(-z) * W

    totals = T.sum(axis=1) + S.sum(axis=1)
    if np.any(totals <= 0.0):
        bad = int(np.flatnonzero(totals <= 0.0)[0])
        raise NumericError(f"isolated point: row {bad} has zero total transition score")
    T /= totals[:, None]
    S /= totals[:, None]
    return ChainBlocks(S=S, T=T, mode_weights=W)


def absorb(blocks: ChainBlocks) -> np.ndarray:
    """Absorption probabilities A = (I - T)^(-1) S via a direct solve.

    Row i of A gives the probability of the walk from X_i being captured by
    each mode; rows sum to one.
    """
    n = blocks.T.shape[0]
    try:
        A = np.linalg.solve(np.eye(n) - blocks.T, blocks.S)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"absorbing solve failed: {e}") from e
    if not np.all(np.isfinite(A)):
        raise NumericError("absorbing solve produced non-finite probabilities")
    rows = A.sum(axis=1)
    if np.any(np.abs(rows - 1.0) > _ROW_SUM_TOL):
        worst = float(np.abs(rows - 1.0).max())
        raise NumericError(
            f"absorption rows deviate from stochasticity by {worst:.3e} (> {_ROW_SUM_TOL})"
        )
    return np.clip(A, 0.0, 1.0)


def connectivity_matrix(
    A: np.ndarray, assignment: ClusterAssignment, sample: WeightedSample
) -> np.ndarray:
    """Symmetrized mark-weighted cluster-to-mode absorption averages.

    Entry (i, j) averages cluster i's absorption into mode j and cluster j's
    absorption into mode i, each as a mark-weighted mean over the cluster's
    points.  The diagonal is zero by convention.
    """
    A = np.asarray(A, dtype=float)
    k = len(assignment.modes)
    if A.ndim != 2 or A.shape != (sample.size, k):
        raise InvalidInputError(
            f"A must have shape ({sample.size}, {k}), got {A.shape}"
        )
    labels = assignment.labels
    B = np.empty((k, k))
    for i in range(k):
        mask = labels == i
        if not np.any(mask):
            raise InvalidInputError(f"cluster {i} is empty; connectivity is undefined")
        wts = sample.weights[mask]
        B[i] = (wts @ A[mask]) / wts.sum()
    omega = 0.5 * (B + B.T)
    np.fill_diagonal(omega, 0.0)
    return omega


def connectivity_pipeline(
    model: GdfModel,
    assignment: ClusterAssignment,
    max_points: int = DEFAULT_MAX_POINTS,
):
    """Convenience wrapper: chain, absorption, connectivity in one call."""
    blocks = build_chain(model, assignment.modes, max_points=max_points)
    A = absorb(blocks)
    omega = connectivity_matrix(A, assignment, model.sample)
    return blocks, ConnectivityResult(A=A, omega=omega)
