"""Absorbing-chain construction, absorption probabilities and connectivity."""

import numpy as np
import pytest

from gdfkit import (
    ChainBlocks,
    GdfModel,
    WeightedSample,
    absorb,
    build_chain,
    cluster,
    collect_modes,
    connectivity_matrix,
    connectivity_pipeline,
    mode_weight,
)
from gdfkit.errors import InvalidInputError, NumericError


def blob_model(rng, centers, n_per=60, scale=0.3, h=0.5):
    pts = np.concatenate(
        [rng.normal(loc=c, scale=scale, size=(n_per, 2)) for c in centers]
    )
    wts = rng.uniform(0.5, 1.5, size=len(pts))
    return GdfModel(WeightedSample(pts, wts), h)


def reference_rows(model, modes, weights_at_modes):
    """Brute-force [S|T] rows straight from the defining scores."""
    X = model.sample.points
    Y = model.sample.weights
    h = model.bandwidth
    n, k = len(X), len(modes)
    S = np.zeros((n, k))
    T = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            z = ((X[i] - X[j]) ** 2).sum() / (2 * h * h)
            T[i, j] = Y[j] * np.exp(-z)
        for j in range(k):
            z = ((X[i] - modes[j]) ** 2).sum() / (2 * h * h)
            S[i, j] = weights_at_modes[j] * np.exp(-z)
        row = T[i].sum() + S[i].sum()
        T[i] /= row
        S[i] /= row
    return S, T


def reference_mode_weight(model, mode):
    """Kernel-weighted mark average at ``mode`` (plain float64)."""
    X, Y, h = model.sample.points, model.sample.weights, model.bandwidth
    e = np.exp(-((mode - X) ** 2).sum(axis=1) / (2 * h * h))
    return float((e * Y).sum() / e.sum())


# ---------------------------------------------------------------------------
# chain construction


def test_chain_rows_sum_to_one():
    rng = np.random.default_rng(71)
    model = blob_model(rng, [(-2.0, 0.0), (2.0, 0.0)])
    ms = collect_modes(model)
    blocks = build_chain(model, ms)
    rows = blocks.T.sum(axis=1) + blocks.S.sum(axis=1)
    np.testing.assert_allclose(rows, 1.0, atol=1e-12)
    assert np.all(blocks.S >= 0.0) and np.all(blocks.T >= 0.0)


def test_chain_matches_brute_force_rows():
    rng = np.random.default_rng(72)
    model = blob_model(rng, [(-1.5, 0.0), (1.5, 0.0)], n_per=12)
    ms = collect_modes(model)
    blocks = build_chain(model, ms)
    S_ref, T_ref = reference_rows(model, ms.modes, blocks.mode_weights)
    np.testing.assert_allclose(blocks.T, T_ref, rtol=1e-12, atol=1e-15)
    np.testing.assert_allclose(blocks.S, S_ref, rtol=1e-12, atol=1e-15)


def test_mode_weight_is_kernel_mark_average():
    rng = np.random.default_rng(73)
    model = blob_model(rng, [(0.0, 0.0)], n_per=40)
    mode = np.array([0.1, -0.2])
    got = mode_weight(model, mode)
    want = reference_mode_weight(model, mode)
    assert got == pytest.approx(want, rel=1e-12)
    # a kernel average of the marks stays inside the mark range
    assert model.sample.weights.min() <= got <= model.sample.weights.max()


def test_chain_size_cap():
    rng = np.random.default_rng(74)
    model = blob_model(rng, [(0.0, 0.0)], n_per=30)
    ms = collect_modes(model)
    with pytest.raises(InvalidInputError):
        build_chain(model, ms, max_points=10)


def test_chain_blocks_validation():
    S = np.array([[0.5, 0.4]])
    T = np.array([[0.2]])
    with pytest.raises(InvalidInputError):
        ChainBlocks(S, T, np.ones(2))  # row sums to 1.1
    ChainBlocks(np.array([[0.5, 0.3]]), T, np.ones(2))  # exactly 1 is fine


# ---------------------------------------------------------------------------
# absorption


def test_absorption_rows_sum_to_one():
    rng = np.random.default_rng(75)
    model = blob_model(rng, [(-2.0, 0.0), (2.0, 0.0)])
    ms = collect_modes(model)
    A = absorb(build_chain(model, ms))
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-8)
    assert np.all(A >= 0.0) and np.all(A <= 1.0)


def test_absorption_matches_fundamental_matrix():
    # independent linear-algebra oracle: A = (I - T)^(-1) S via explicit
    # inverse rather than a solve
    rng = np.random.default_rng(76)
    model = blob_model(rng, [(-1.5, 0.0), (1.5, 0.0)], n_per=15)
    ms = collect_modes(model)
    blocks = build_chain(model, ms)
    A = absorb(blocks)
    want = np.linalg.inv(np.eye(len(blocks.T)) - blocks.T) @ blocks.S
    np.testing.assert_allclose(A, want, atol=1e-10)


def test_absorption_matches_simulated_walks():
    # Monte-Carlo oracle: simulate absorbing walks on a tiny chain
    rng = np.random.default_rng(77)
    model = blob_model(rng, [(-1.2, 0.0), (1.2, 0.0)], n_per=2, h=0.8)
    ms = collect_modes(model)
    blocks = build_chain(model, ms)
    A = absorb(blocks)
    n, k = blocks.S.shape
    walks = 200_000
    P = np.concatenate([blocks.T, blocks.S], axis=1)  # transient then absorbing
    cum = np.cumsum(P, axis=1)
    for start in range(n):
        state = np.full(walks, start)
        absorbed = np.full(walks, -1)
        alive = np.arange(walks)
        for _ in range(10_000):
            u = rng.random(alive.size)
            nxt = (u[:, None] > cum[state[alive]]).sum(axis=1)
            hit = nxt >= n
            absorbed[alive[hit]] = nxt[hit] - n
            state[alive[~hit]] = nxt[~hit]
            alive = alive[~hit]
            if alive.size == 0:
                break
        assert alive.size == 0
        freq = np.bincount(absorbed, minlength=k) / walks
        se = np.sqrt(np.maximum(A[start] * (1 - A[start]), 1e-12) / walks)
        assert np.all(np.abs(freq - A[start]) <= 3.0 * se + 1e-9)


# ---------------------------------------------------------------------------
# connectivity


def test_omega_symmetric_unit_interval_zero_diagonal():
    rng = np.random.default_rng(78)
    model = blob_model(rng, [(-2.0, 0.0), (2.0, 0.0), (0.0, 2.5)])
    assignment = cluster(model)
    _, result = connectivity_pipeline(model, assignment)
    A, omega = result.A, result.omega
    np.testing.assert_array_equal(omega, omega.T)
    assert np.all(np.diag(omega) == 0.0)
    assert np.all(omega >= 0.0) and np.all(omega <= 1.0)
    assert A.shape == (model.size, len(assignment.modes))


def test_close_blobs_more_connected_than_far():
    rng = np.random.default_rng(79)
    centers = [(-1.2, 0.0), (1.2, 0.0), (8.0, 0.0)]
    model = blob_model(rng, centers, h=0.6)
    assignment = cluster(model)
    assert len(assignment.modes) == 3
    omega = connectivity_pipeline(model, assignment)[1].omega
    xs = assignment.modes.modes[:, 0]
    near = [int(np.argmin(np.abs(xs - c))) for c in (-1.2, 1.2)]
    far = int(np.argmin(np.abs(xs - 8.0)))
    assert omega[near[0], near[1]] > omega[near[0], far]
    assert omega[near[0], near[1]] > omega[near[1], far]


def test_separated_blobs_have_negligible_connectivity():
    rng = np.random.default_rng(80)
    model = blob_model(rng, [(-6.0, 0.0), (6.0, 0.0)], h=0.5)  # 24 bandwidths apart
    assignment = cluster(model)
    omega = connectivity_pipeline(model, assignment)[1].omega
    assert omega[0, 1] <= 1e-6


def test_single_mode_connectivity():
    rng = np.random.default_rng(81)
    model = blob_model(rng, [(0.0, 0.0)])
    assignment = cluster(model)
    _, result = connectivity_pipeline(model, assignment)
    A, omega = result.A, result.omega
    np.testing.assert_allclose(A, 1.0, atol=1e-8)
    assert omega.shape == (1, 1) and omega[0, 0] == 0.0


def test_connectivity_matrix_rejects_shape_mismatch():
    rng = np.random.default_rng(82)
    model = blob_model(rng, [(-2.0, 0.0), (2.0, 0.0)])
    assignment = cluster(model)
    bad = np.ones((3, len(assignment.modes)))
    with pytest.raises(InvalidInputError):
        connectivity_matrix(bad, assignment, model.sample)


def test_mark_scale_leaves_chain_unchanged():
    rng = np.random.default_rng(83)
    model = blob_model(rng, [(-1.5, 0.0), (1.5, 0.0)])
    ms = collect_modes(model)
    blocks = build_chain(model, ms)
    A = absorb(blocks)
    for c in (1e-3, 1e3):
        scaled = GdfModel(
            WeightedSample(model.sample.points, c * model.sample.weights),
            model.bandwidth,
        )
        ms_c = collect_modes(scaled)
        blocks_c = build_chain(scaled, ms_c)
        np.testing.assert_allclose(blocks_c.S, blocks.S, atol=1e-12)
        np.testing.assert_allclose(blocks_c.T, blocks.T, atol=1e-12)
        np.testing.assert_allclose(absorb(blocks_c), A, atol=1e-10)
