import numpy as np
import pytest

from repfl.attacks import (
    ALL_CLASSES,
    AttackConfig,
    Schedule,
    choose_attackers,
    flip_labels,
    implant_backdoor,
    poison,
    schedule_active,
)
from repfl.datagen import Dataset


def small_set(n0=10, n1=10, k=2):
    labels = np.array([0] * n0 + [1] * n1)
    feats = np.arange(len(labels) * 3, dtype=float).reshape(-1, 3)
    return Dataset(feats, labels, k)


def test_flip_full_rate():
    out = flip_labels(small_set(), 0, 1, 1.0, 0)
    assert (out.labels == 1).all()


def test_flip_zero_rate_is_identity():
    ds = small_set()
    out = flip_labels(ds, 0, 1, 0.0, 0)
    np.testing.assert_array_equal(out.labels, ds.labels)
    np.testing.assert_array_equal(out.features, ds.features)


def test_flip_half_rate_counts():
    out = flip_labels(small_set(), 0, 1, 0.5, 3)
    assert (out.labels == 1).sum() == 15


def test_flip_all_classes_is_cyclic():
    ds = Dataset(np.zeros((6, 1)), np.array([0, 1, 2, 0, 1, 2]), 3)
    out = flip_labels(ds, ALL_CLASSES, 1, 1.0, 0)
    assert out.labels.tolist() == [1, 2, 0, 1, 2, 0]


def test_backdoor_examples():
    ds = small_set()
    same = implant_backdoor(ds, ((0, 9.9),), 1, 0.0, 0)
    np.testing.assert_array_equal(same.features, ds.features)
    full = implant_backdoor(ds, ((0, 9.9),), 1, 1.0, 0)
    assert (full.features[:, 0] == 9.9).all() and (full.labels == 1).all()
    with pytest.raises(ValueError):
        implant_backdoor(ds, ((4, 1.0),), 1, 0.5, 0)


def test_schedule_examples():
    once = Schedule.parse("once:3")
    assert schedule_active(once, 3) and not schedule_active(once, 4)
    start = Schedule.parse("from:3")
    assert not schedule_active(start, 2) and schedule_active(start, 7)
    loop = Schedule.parse("every:10:30")
    assert all(schedule_active(loop, t) for t in (10, 40, 70))
    assert not schedule_active(loop, 25)
    assert not schedule_active(Schedule("never"), 5)


@pytest.mark.parametrize("text", ["always", "never", "once:3", "from:7", "every:10:30"])
def test_schedule_round_trip(text):
    assert str(Schedule.parse(text)) == text


@pytest.mark.parametrize("text", ["sometimes", "once", "every:3", "once:0"])
def test_schedule_parse_errors(text):
    with pytest.raises(ValueError):
        Schedule.parse(text)


def test_shifted_schedule():
    assert Schedule.parse("from:3").shifted(6) == Schedule("from", 9)
    assert Schedule("always").shifted(4) == Schedule("always")


def test_choose_attackers():
    ids = choose_attackers(10, 0.3, 5)
    assert len(ids) == 3 and ids == sorted(ids) and len(set(ids)) == 3
    assert choose_attackers(10, 0.3, 5) == ids
    assert choose_attackers(10, 0.0, 5) == []
    assert len(choose_attackers(30, 1 / 3, 0)) == 10


def test_attack_config_validation():
    with pytest.raises(ValueError):
        AttackConfig("label-flip", 0.2, source=1, target=1)
    with pytest.raises(ValueError):
        AttackConfig("ddos")
    with pytest.raises(ValueError):
        AttackConfig("backdoor", 1.5)
    assert not AttackConfig("label-flip", 0.0).enabled
    assert AttackConfig("label-flip", 0.2, source=ALL_CLASSES, target=0).attacked_class(3) == 2


def test_poison_dispatch():
    ds = small_set()
    assert poison(ds, AttackConfig(), 0) is ds
    flipped = poison(ds, AttackConfig("label-flip", 0.1), 0)
    assert (flipped.labels == 1).all()
