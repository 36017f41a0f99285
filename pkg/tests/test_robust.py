import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repfl.robust import (
    RegressionLine,
    RobustConfig,
    confidence_scores,
    leverage,
    ranks,
    rectify,
    repeated_median_fit,
    repeated_median_line,
    rescale,
)

COLUMN = np.array([1.1, 1.9, 3.2, 3.8, 100.0])


def test_rescale_hand_trace():
    np.testing.assert_allclose(rescale(np.array([0.0, 1.0, 10.0])), [4.4969, 2.9298, 3.5733], atol=1e-3)


@pytest.mark.parametrize("column", [[1.0, 1.5, 2.0], [4.0, 4.0, 4.0, 4.0]])
def test_rescale_leaves_narrow_columns(column):
    np.testing.assert_array_equal(rescale(np.array(column)), column)


def test_rescale_matrix_matches_columns():
    w = np.random.default_rng(0).normal(scale=5, size=(7, 6))
    out = rescale(w)
    for j in range(6):
        np.testing.assert_allclose(out[:, j], rescale(w[:, j]))


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=15))
@settings(max_examples=100, deadline=None)
def test_rescale_always_ends_in_range(values):
    out = rescale(np.array(values))
    assert np.ptp(out) <= 2.0 + 1e-9


def test_rescale_clamp_after_iteration_cap():
    out = rescale(np.array([0.0, 1e9]), RobustConfig(max_rescale_iter=0))
    assert np.ptp(out) <= 2.0


def test_ranks_break_ties_by_index():
    np.testing.assert_array_equal(ranks(np.array([3.0, 1.0, 3.0, 2.0])), [3, 1, 4, 2])


@pytest.mark.parametrize(
    "values, slope, intercept",
    [([1, 2, 3], 1.0, 0.0), ([1, 2, 3, 4, 100], 1.0, 0.0), ([3, 5], 2.0, 1.0)],
)
def test_repeated_median_examples(values, slope, intercept):
    line = repeated_median_line(np.array(values, dtype=float))
    assert line.slope == pytest.approx(slope)
    assert line.intercept == pytest.approx(intercept)


def brute_force_rm(values):
    m = len(values)
    x = np.argsort(np.argsort(values, kind="stable"), kind="stable") + 1.0
    inner = [np.median([(values[j] - values[i]) / (x[j] - x[i]) for j in range(m) if j != i]) for i in range(m)]
    slope = np.median(inner)
    return slope, np.median(values - slope * x)


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=9))
@settings(max_examples=100, deadline=None)
def test_repeated_median_matches_brute_force(values):
    v = np.array(values)
    line = repeated_median_line(v)
    slope, intercept = brute_force_rm(v)
    assert line.slope == pytest.approx(slope, abs=1e-9)
    assert line.intercept == pytest.approx(intercept, abs=1e-9)


def test_repeated_median_breakdown():
    # M = 10 tolerates floor((M - 1) / 2) = 4 arbitrary values with the slope recovered exactly
    rng = np.random.default_rng(123)
    m, k = 10, 4
    x = np.arange(1.0, m + 1)[:, None]
    for _ in range(200):
        slope = rng.uniform(-5, 5)
        y = rng.uniform(-10, 10) + slope * x
        bad = rng.choice(m, size=k, replace=False)
        y[bad, 0] = rng.uniform(-1e6, 1e6, size=k)
        fit, _ = repeated_median_fit(x, y)
        assert abs(fit[0] - slope) < 1e-9


@given(st.integers(3, 24), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_repeated_median_breakdown_any_m(m, seed):
    rng = np.random.default_rng(seed)
    x = np.arange(1.0, m + 1)[:, None]
    slope = rng.uniform(-5, 5)
    y = slope * x + 1.0
    bad = rng.choice(m, size=(m - 2) // 2, replace=False)
    y[bad, 0] = rng.uniform(-1e6, 1e6, size=len(bad))
    assert abs(repeated_median_fit(x, y)[0][0] - slope) < 1e-9


@pytest.mark.xfail(
    strict=True,
    reason="odd M: a clean point's inner median averages one clean and one corrupted slope",
)
def test_repeated_median_breakdown_m11():
    rng = np.random.default_rng(11)
    x = np.arange(1.0, 12)[:, None]
    for _ in range(200):
        y = 2 * x + 1
        bad = rng.choice(11, size=5, replace=False)
        y[bad, 0] = rng.uniform(-1e6, 1e6, size=5)
        slope, intercept = repeated_median_fit(x, y)
        assert abs(slope[0] - 2) < 1e-9 and abs(intercept[0] - 1) < 1e-9


def test_leverage_sums_to_two():
    h = leverage(5)
    assert h.sum() == pytest.approx(2.0)
    assert h[0] == pytest.approx(0.6) and h[-1] == pytest.approx(0.6)


def test_confidence_scores_hand_example():
    scores = confidence_scores(COLUMN, RegressionLine(1.0, 0.0, np.arange(1, 6)))
    np.testing.assert_allclose(scores[:4], 1.0, atol=1e-4)
    assert scores[4] == pytest.approx(0.00561, abs=1e-4)


def test_confidence_scores_perfect_fit():
    col = np.array([2.0, 4.0, 6.0, 8.0])
    np.testing.assert_array_equal(confidence_scores(col, repeated_median_line(col)), 1.0)


def test_confidence_scores_need_three_clients():
    col = np.array([1.0, 2.0])
    with pytest.raises(ValueError):
        confidence_scores(col, repeated_median_line(col))


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=12))
@settings(max_examples=100, deadline=None)
def test_scores_in_unit_interval(values):
    v = np.array(values)
    s = confidence_scores(v, repeated_median_line(v))
    assert np.all((s > 0) & (s <= 1))


def test_rectify_examples():
    out, ok = rectify(COLUMN, np.array([1, 1, 1, 1, 0.00561]), 0.1)
    np.testing.assert_allclose(out, [1.1, 1.9, 3.2, 3.8, 3.2])
    assert ok.tolist() == [True, True, True, True, False]

    out, ok = rectify(COLUMN, np.ones(5), 0.1)
    np.testing.assert_array_equal(out, COLUMN)
    assert ok.all()

    out, ok = rectify(COLUMN, np.full(5, 0.01), 0.1)
    np.testing.assert_array_equal(out, 3.2)
    assert not ok.any()


def test_permutation_equivariance():
    rng = np.random.default_rng(9)
    w = rng.normal(size=(8, 5))
    w[3] += 50
    perm = rng.permutation(8)
    base = confidence_scores(w, repeated_median_line(w))
    moved = confidence_scores(w[perm], repeated_median_line(w[perm]))
    np.testing.assert_allclose(moved, base[perm])


@pytest.mark.parametrize("kwargs", [{"range_threshold": 0}, {"confidence_threshold": 1.0}, {"lam": -1}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        RobustConfig(**kwargs)
