"""Mean-shift ascent, convergence bookkeeping and mode merging."""

import numpy as np
import pytest

from gdfkit import (
    AscentConfig,
    GdfModel,
    WeightedSample,
    ascend,
    collect_modes,
    gdf_gradient,
    gdf_value,
    gdf_value_many,
    mean_shift_step,
)
from gdfkit.errors import EmptyResultError, InvalidInputError, LowDensityError


def two_blob_model(rng, n=150, sep=4.0, h=0.6):
    half = n // 2
    pts = np.concatenate(
        [
            rng.normal(loc=(-sep / 2, 0.0), scale=0.35, size=(half, 2)),
            rng.normal(loc=(sep / 2, 0.0), scale=0.35, size=(n - half, 2)),
        ]
    )
    wts = rng.uniform(0.5, 1.5, size=n)
    return GdfModel(WeightedSample(pts, wts), h)


# ---------------------------------------------------------------------------
# single steps


def test_step_is_weighted_average_of_sample():
    # hand formula: x' = sum_i w_i X_i / sum_i w_i with w_i = Y_i K((x-X_i)/h)
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
    wts = np.array([1.0, 2.0, 0.5])
    model = GdfModel(WeightedSample(pts, wts), 0.8)
    x = np.array([0.4, 0.3])
    z = ((x - pts) ** 2).sum(axis=1) / (2 * 0.8**2)
    w = wts * np.exp(-z)
    want = w @ pts / w.sum()
    np.testing.assert_allclose(mean_shift_step(model, x), want, rtol=1e-13)


def test_step_raises_when_all_kernels_underflow():
    model = GdfModel(WeightedSample(np.zeros((4, 2)), np.ones(4)), 0.1)
    with pytest.raises(LowDensityError):
        mean_shift_step(model, np.array([100.0, 0.0]))


def test_step_stays_inside_convex_hull():
    rng = np.random.default_rng(21)
    pts = rng.uniform(-1.0, 1.0, size=(40, 2))
    model = GdfModel(WeightedSample(pts, rng.uniform(0.2, 2.0, 40)), 0.5)
    for _ in range(10):
        x = rng.uniform(-1.5, 1.5, size=2)
        nxt = mean_shift_step(model, x)
        assert np.all(nxt >= pts.min(axis=0) - 1e-12)
        assert np.all(nxt <= pts.max(axis=0) + 1e-12)


# ---------------------------------------------------------------------------
# full ascent


def test_ascent_values_never_decrease():
    rng = np.random.default_rng(22)
    model = two_blob_model(rng)
    for _ in range(6):
        x0 = rng.uniform(-3.0, 3.0, size=2)
        tr = ascend(model, x0)
        rel_drop = np.diff(tr.values) / np.abs(tr.values[:-1])
        assert rel_drop.min() >= -1e-12


def test_ascent_records_start_and_converges():
    rng = np.random.default_rng(23)
    model = two_blob_model(rng)
    x0 = np.array([1.4, 0.2])
    tr = ascend(model, x0)
    np.testing.assert_array_equal(tr.points[0], x0)
    assert tr.converged and tr.reason == "step_tolerance"
    assert len(tr.points) == len(tr.values)
    # last step moved less than step_tol * h
    last = np.linalg.norm(tr.points[-1] - tr.points[-2])
    assert last <= 1e-7 * model.bandwidth


def test_gradient_vanishes_at_endpoint():
    rng = np.random.default_rng(24)
    model = two_blob_model(rng)
    tr = ascend(model, np.array([1.0, 0.5]))
    end = tr.points[-1]
    # the mean-shift displacement is grad * h^2 / (local kernel mass), so a
    # sub-tolerance step implies a small gradient relative to f/h
    bound = 1e-7 * gdf_value(model, end) / model.bandwidth * (1.0 + 1e-6)
    assert np.linalg.norm(gdf_gradient(model, end)) <= bound


def test_symmetric_data_has_central_stationary_point():
    # two equal marks at +/-a with overlapping kernels: the midpoint is a
    # fixed point of the ascent by symmetry
    model = GdfModel(WeightedSample(np.array([[-0.3], [0.3]]), np.ones(2)), 0.6)
    step = mean_shift_step(model, np.array([0.0]))
    assert abs(step[0]) <= 1e-15


def test_max_iters_reported():
    rng = np.random.default_rng(25)
    model = two_blob_model(rng)
    cfg = AscentConfig(step_tol=1e-14, max_iters=3)
    tr = ascend(model, np.array([2.0, 1.0]), cfg)
    assert not tr.converged and tr.reason == "max_iters"


def test_ascent_config_validation():
    with pytest.raises(InvalidInputError):
        AscentConfig(step_tol=0.0)
    with pytest.raises(InvalidInputError):
        AscentConfig(max_iters=0)
    with pytest.raises(InvalidInputError):
        AscentConfig(merge_radius=-1.0)


# ---------------------------------------------------------------------------
# mode collection and merging


def test_two_blobs_give_two_modes():
    rng = np.random.default_rng(26)
    model = two_blob_model(rng, n=200)
    ms = collect_modes(model)
    assert len(ms) == 2
    xs = np.sort(ms.modes[:, 0])
    assert xs[0] == pytest.approx(-2.0, abs=0.25)
    assert xs[1] == pytest.approx(2.0, abs=0.25)
    assert int(ms.basin_counts.sum()) == 200
    # each basin holds roughly half the sample
    assert ms.basin_counts.min() >= 60


def test_modes_found_match_grid_argmax():
    # independent oracle: densely evaluate the field and compare the best
    # mode against the grid argmax
    rng = np.random.default_rng(27)
    model = two_blob_model(rng, n=120)
    gx, gy = np.meshgrid(np.linspace(-3, 3, 301), np.linspace(-1.5, 1.5, 151))
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    vals = gdf_value_many(model, grid)
    best = grid[int(np.argmax(vals))]
    ms = collect_modes(model)
    top = ms.modes[int(np.argmax(ms.values))]
    assert np.linalg.norm(top - best) <= 0.03  # within one grid cell
    assert ms.values.max() >= vals.max() - 1e-12


def test_mode_values_sorted_descending():
    rng = np.random.default_rng(28)
    model = two_blob_model(rng)
    ms = collect_modes(model)
    assert np.all(np.diff(ms.values) <= 0.0)


def test_modes_are_separated_by_merge_radius():
    rng = np.random.default_rng(29)
    model = two_blob_model(rng)
    cfg = AscentConfig(merge_radius=0.5)
    ms = collect_modes(model, cfg=cfg)
    for i in range(len(ms)):
        for j in range(i + 1, len(ms)):
            gap = np.linalg.norm(ms.modes[i] - ms.modes[j])
            assert gap > 0.5 * model.bandwidth


def test_merge_radius_can_fuse_everything():
    rng = np.random.default_rng(30)
    model = two_blob_model(rng)
    cfg = AscentConfig(merge_radius=20.0)  # radius exceeds the blob spacing
    ms = collect_modes(model, cfg=cfg)
    assert len(ms) == 1


def test_top_eigenvalues_negative_at_modes():
    rng = np.random.default_rng(31)
    model = two_blob_model(rng)
    ms = collect_modes(model)
    assert np.all(ms.top_eigenvalues < 0.0)


def test_custom_seeds_and_mark_scale_invariance():
    rng = np.random.default_rng(32)
    model = two_blob_model(rng)
    seeds = rng.uniform(-2.5, 2.5, size=(40, 2))
    base = collect_modes(model, seeds=seeds)
    for c in (1e-3, 1e3):
        scaled = GdfModel(
            WeightedSample(model.sample.points, c * model.sample.weights),
            model.bandwidth,
        )
        ms = collect_modes(scaled, seeds=seeds)
        # a 1-ulp mark perturbation can flip the marginal stopping
        # iteration, so endpoints agree only to the step tolerance scale
        np.testing.assert_allclose(ms.modes, base.modes, atol=1e-7 * model.bandwidth)
        np.testing.assert_allclose(ms.values, c * base.values, rtol=1e-9)
        np.testing.assert_array_equal(ms.basin_counts, base.basin_counts)


def test_mark_scale_leaves_iterates_unchanged():
    # the sharp invariance claim: step k equals step k once marks are
    # rescaled, not merely the same limit
    rng = np.random.default_rng(35)
    model = two_blob_model(rng)
    for x0 in (np.array([1.3, 0.4]), np.array([-0.7, -0.9])):
        base = ascend(model, x0)
        for c in (1e-3, 1e3):
            scaled = GdfModel(
                WeightedSample(model.sample.points, c * model.sample.weights),
                model.bandwidth,
            )
            tr = ascend(scaled, x0)
            m = min(len(tr.points), len(base.points))
            np.testing.assert_allclose(
                tr.points[:m], base.points[:m], rtol=0.0, atol=1e-12
            )
            np.testing.assert_allclose(tr.values[:m], c * base.values[:m], rtol=1e-12)


def test_no_convergence_raises_empty_result():
    rng = np.random.default_rng(33)
    model = two_blob_model(rng)
    cfg = AscentConfig(step_tol=1e-15, max_iters=2)
    with pytest.raises(EmptyResultError):
        collect_modes(model, cfg=cfg)


def test_duplicate_seeds_are_merged():
    rng = np.random.default_rng(34)
    model = two_blob_model(rng)
    seeds = np.tile(np.array([[1.8, 0.0]]), (5, 1))
    ms = collect_modes(model, seeds=seeds)
    assert len(ms) == 1
    assert int(ms.basin_counts[0]) == 5
