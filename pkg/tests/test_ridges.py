"""Eigenframe extraction and subspace-constrained mean shift."""

import numpy as np
import pytest

from gdfkit import (
    AscentConfig,
    GdfModel,
    WeightedSample,
    eigen_frame,
    gdf_all,
    gdf_gradient,
    mean_shift_step,
    scms_step,
    trace_ridge,
)
from gdfkit.errors import (
    EmptyResultError,
    InvalidInputError,
    UnsupportedDimensionError,
)


def ring_sample(rng, n=400, radius=2.0, noise=0.2):
    theta = rng.uniform(0.0, 2.0 * np.pi, size=n)
    r = radius + rng.normal(scale=noise, size=n)
    pts = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    return GdfModel(WeightedSample(pts, np.ones(n)), 0.45)


# ---------------------------------------------------------------------------
# eigenframe


def test_eigen_frame_reconstructs_matrix():
    rng = np.random.default_rng(41)
    for d in (2, 3, 5):
        A = rng.normal(size=(d, d))
        H = (A + A.T) / 2.0
        frame = eigen_frame(H)
        assert np.all(np.diff(frame.eigenvalues) <= 1e-12)
        # the trailing basis spans the orthogonal complement of the top
        # eigenvector: H restricted to it reproduces the smaller eigenvalues
        V = frame.basis
        assert V.shape == (d, d - 1)
        np.testing.assert_allclose(V.T @ V, np.eye(d - 1), atol=1e-12)
        restricted = V.T @ H @ V
        got = np.sort(np.linalg.eigvalsh(restricted))
        np.testing.assert_allclose(got, np.sort(frame.eigenvalues[1:]), atol=1e-10)


def test_eigen_frame_matches_independent_eigh():
    rng = np.random.default_rng(42)
    A = rng.normal(size=(3, 3))
    H = (A + A.T) / 2.0
    frame = eigen_frame(H)
    vals = np.linalg.eigvalsh(H)  # ascending
    np.testing.assert_allclose(frame.eigenvalues, vals[::-1], atol=1e-12)


def test_eigen_frame_sign_convention_is_deterministic():
    H = np.diag([3.0, 2.0, 1.0])
    frame = eigen_frame(H)
    # for each basis column the entry of largest magnitude is positive
    for col in frame.basis.T:
        assert col[int(np.argmax(np.abs(col)))] > 0.0


def test_eigen_frame_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        eigen_frame(np.array([[1.0, 2.0], [0.0, 1.0]]))  # not symmetric
    with pytest.raises(InvalidInputError):
        eigen_frame(np.ones((2, 3)))
    with pytest.raises(UnsupportedDimensionError):
        eigen_frame(np.array([[1.0]]))


# ---------------------------------------------------------------------------
# projected steps


def test_scms_step_is_projected_mean_shift():
    # oracle: project the plain mean-shift displacement onto the trailing
    # eigenspace of the local Hessian, computed here independently
    rng = np.random.default_rng(43)
    model = ring_sample(rng)
    for _ in range(5):
        x = rng.normal(scale=1.5, size=2)
        shift = mean_shift_step(model, x) - x
        H = gdf_all(model, x).hessian
        vals, vecs = np.linalg.eigh(H)  # ascending
        V = vecs[:, :-1]  # drop the leading eigenvector
        want = x + V @ (V.T @ shift)
        np.testing.assert_allclose(scms_step(model, x), want, atol=1e-12)


def test_scms_step_preserves_leading_component():
    rng = np.random.default_rng(44)
    model = ring_sample(rng)
    x = np.array([1.2, 0.4])
    H = gdf_all(model, x).hessian
    _, vecs = np.linalg.eigh(H)
    top = vecs[:, -1]
    moved = scms_step(model, x)
    # motion is orthogonal to the leading eigenvector
    assert abs(top @ (moved - x)) <= 1e-12


# ---------------------------------------------------------------------------
# ridge tracing


def test_circle_ridge_recovered():
    rng = np.random.default_rng(45)
    model = ring_sample(rng, n=400)
    seeds = model.sample.points[rng.choice(400, size=120, replace=False)]
    ridge = trace_ridge(model, seeds)
    r = np.linalg.norm(ridge.points, axis=1)
    assert len(ridge) >= 100
    assert np.abs(r - 2.0).mean() <= 0.1
    assert np.all(ridge.second_eigenvalues < 0.0)


def test_ridge_points_satisfy_projected_gradient_tolerance():
    rng = np.random.default_rng(46)
    model = ring_sample(rng)
    seeds = model.sample.points[:60]
    ridge = trace_ridge(model, seeds, ridge_tol=1e-8)
    for x, g_norm in zip(ridge.points, ridge.projected_grad_norms):
        H = gdf_all(model, x).hessian
        _, vecs = np.linalg.eigh(H)
        V = vecs[:, :-1]
        want = np.linalg.norm(V @ (V.T @ gdf_gradient(model, x)))
        assert want <= 1e-8
        assert g_norm == pytest.approx(want, rel=1e-6, abs=1e-12)


def test_modes_are_ridge_points():
    # a local maximum satisfies the ridge conditions, so seeding at a mode
    # must retain it essentially unmoved
    rng = np.random.default_rng(47)
    pts = rng.normal(scale=0.5, size=(200, 2))
    model = GdfModel(WeightedSample(pts, np.ones(200)), 0.5)
    from gdfkit import collect_modes

    ms = collect_modes(model)
    ridge = trace_ridge(model, ms.modes)
    assert len(ridge) == len(ms)
    np.testing.assert_allclose(ridge.points, ms.modes, atol=1e-5)


def test_density_floor_filters_low_ridge():
    rng = np.random.default_rng(48)
    model = ring_sample(rng)
    seeds = model.sample.points[:80]
    kept = trace_ridge(model, seeds, density_floor=0.0)
    with pytest.raises(EmptyResultError):
        trace_ridge(model, seeds, density_floor=10.0 * kept.values.max())


def test_degenerate_isotropic_center_is_dropped():
    # four points on a cross make the Hessian at the center a multiple of
    # the identity: no distinguished ridge direction, so the seed is
    # rejected as degenerate rather than kept
    a = 0.7
    pts = np.array([[a, 0.0], [-a, 0.0], [0.0, a], [0.0, -a]])
    model = GdfModel(WeightedSample(pts, np.ones(4)), 0.5)
    with pytest.raises(EmptyResultError) as err:
        trace_ridge(model, np.zeros((1, 2)))
    assert "degenerate" in str(err.value)


def test_one_dimensional_data_unsupported():
    model = GdfModel(WeightedSample(np.linspace(0, 1, 20), np.ones(20)), 0.3)
    with pytest.raises(UnsupportedDimensionError):
        trace_ridge(model, np.array([[0.5]]))


def test_scms_mark_scale_invariance():
    rng = np.random.default_rng(49)
    model = ring_sample(rng)
    x = np.array([1.5, -0.3])
    base = scms_step(model, x)
    for c in (1e-3, 1e3):
        scaled = GdfModel(
            WeightedSample(model.sample.points, c * model.sample.weights),
            model.bandwidth,
        )
        np.testing.assert_allclose(scms_step(scaled, x), base, atol=1e-12)


def test_ridge_output_shapes_consistent():
    rng = np.random.default_rng(50)
    model = ring_sample(rng)
    ridge = trace_ridge(model, model.sample.points[:30])
    k = len(ridge)
    assert ridge.points.shape == (k, 2)
    assert ridge.values.shape == (k,)
    assert ridge.projected_grad_norms.shape == (k,)
    assert ridge.second_eigenvalues.shape == (k,)
