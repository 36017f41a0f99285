import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repfl.reputation import (
    ClientReputation,
    ReputationConfig,
    RoundRecord,
    minmax_normalize,
    opinion,
    round_reputation,
    update_weights,
    windowed_reputation,
)

CFG = ReputationConfig()


def test_opinion_examples():
    assert opinion(10, 0) == pytest.approx((0.6, 0.0, 0.4))
    assert opinion(0, 0) == (0.0, 0.0, 1.0)


@pytest.mark.parametrize("p, n, expected", [(10, 0, 0.8), (0, 0, 0.5), (0, 10, 1 / 9)])
def test_round_reputation_examples(p, n, expected):
    assert round_reputation(p, n) == pytest.approx(expected, abs=1e-4)


@pytest.mark.parametrize(
    "cfg",
    [CFG, ReputationConfig(kappa=0.45, prior=0.2, prior_weight=0.5), ReputationConfig(kappa=0.1, prior=0.9, prior_weight=7)],
)
def test_expected_opinion_matches_direct_formula(cfg):
    # 100 x 100 grid of counts
    grid = np.arange(0, 1000, 10)
    worst = 0.0
    for p in grid:
        for n in grid:
            b, d, u = opinion(p, n, cfg)
            assert b + d + u == pytest.approx(1.0, abs=1e-12)
            worst = max(worst, abs(round_reputation(p, n, cfg) - (b + cfg.prior * u)))
    assert worst <= 1e-12


def test_monotone_in_counts():
    p = np.arange(0, 1001, 50)
    r_pos = [round_reputation(v, 100) for v in p]
    r_neg = [round_reputation(100, v) for v in p]
    assert np.all(np.diff(r_pos) > 0)
    assert np.all(np.diff(r_neg) < 0)


def test_punishment_outweighs_reward():
    for n in (1, 10, 1000):
        assert round_reputation(n, n) < CFG.prior


def test_negative_counts_rejected():
    with pytest.raises(ValueError):
        round_reputation(-1, 0)


def test_windowed_examples():
    assert windowed_reputation([(5, 0.8)], CFG, 5) == pytest.approx(0.8)
    assert windowed_reputation([(1, 0.8), (2, 1 / 9)], CFG, 2) == pytest.approx(0.3712, abs=1e-4)
    # j = t - s - 1 falls outside the window
    assert windowed_reputation([(9, 0.0), (20, 0.7)], CFG, 20) == pytest.approx(0.7)


def test_windowed_empty_window_errors():
    with pytest.raises(ValueError):
        windowed_reputation([(1, 0.5)], CFG, 30)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=12))
@settings(max_examples=100, deadline=None)
def test_windowed_bounded_and_stable(values):
    hist = [RoundRecord(j + 1, 0, 0, v) for j, v in enumerate(values)]
    t = len(values)
    inside = [h.reputation for h in hist if h.round >= max(t - CFG.window, 0)]
    r = windowed_reputation(hist, CFG, t)
    assert min(inside) - 1e-12 <= r <= max(inside) + 1e-12
    same = [RoundRecord(j + 1, 0, 0, 0.42) for j in range(t)]
    assert windowed_reputation(same, CFG, t) == pytest.approx(0.42)


@pytest.mark.parametrize(
    "values, expected",
    [([0.2, 0.5, 0.8], [0, 0.5, 1]), ([0.3, 0.3, 0.3, 0.3], [0.25] * 4), ([0.1, 0.9], [0, 1])],
)
def test_minmax_examples(values, expected):
    np.testing.assert_allclose(minmax_normalize(values), expected)


@given(
    st.lists(st.floats(-100, 100), min_size=2, max_size=10),
    st.floats(0.1, 10),
    st.floats(-10, 10),
)
@settings(max_examples=100, deadline=None)
def test_minmax_affine_invariance(values, alpha, beta):
    v = np.array(values)
    if np.ptp(v) < 1e-3:
        return
    np.testing.assert_allclose(minmax_normalize(alpha * v + beta), minmax_normalize(v), atol=1e-9)


def test_client_state_records_and_trims():
    cfg = ReputationConfig(window=3)
    state = ClientReputation()
    for t in range(1, 8):
        state = state.record(t, 10, 0, cfg)
    assert [h.round for h in state.history] == [4, 5, 6, 7]
    assert state.windowed == pytest.approx(0.8)
    with pytest.raises(ValueError):
        state.record(7, 1, 1, cfg)


def test_update_weights_sum_to_one():
    states = [ClientReputation().record(1, p, 20 - p, CFG) for p in (20, 15, 5)]
    out = update_weights(states)
    assert sum(s.weight for s in out) == pytest.approx(1.0)
    assert out[2].weight == 0.0 and out[0].normalized == 1.0


def test_eta_complements_kappa():
    assert ReputationConfig(kappa=0.4).eta == pytest.approx(0.6)
