import pytest

from repfl.attacks import ALL_CLASSES, Schedule
from repfl.config import SCHEMA, ConfigError, defaults, dump_defaults, parse_config


def test_empty_file_gives_defaults():
    cfg = parse_config("")
    rep, rob, sim = cfg.reputation, cfg.robust, cfg.sim
    assert (rep.prior, rep.prior_weight, rep.kappa, rep.decay, rep.window) == (0.5, 2.0, 0.3, 0.5, 10)
    assert (rob.confidence_threshold, rob.range_threshold) == (0.1, 2.0)
    assert (sim.lr, sim.batch_size, sim.epochs, sim.rounds, sim.n_clients) == (0.01, 64, 10, 100, 10)
    assert cfg.eta == pytest.approx(0.7)


def test_kappa_override_sets_eta():
    assert parse_config("reputation.kappa = 0.4").eta == pytest.approx(0.6)


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="robust.unknown"):
        parse_config("robust.unknown=1")


def test_bad_value_names_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config("# comment\nsim.rounds = 5\ntrain.lr = fast\n")


def test_constraint_violation_names_key():
    with pytest.raises(ConfigError, match="sim.trim_beta"):
        parse_config("sim.aggregator = trimmed-mean\nsim.trim_beta = 5\n")
    with pytest.raises(ConfigError, match="reputation.kappa"):
        parse_config("reputation.kappa = 1.5")


def test_missing_equals():
    with pytest.raises(ConfigError, match="line 1"):
        parse_config("sim.rounds 5")


def test_structured_values():
    cfg = parse_config(
        "attack.kind = backdoor\nattack.fraction = 0.3\nattack.trigger = 0:9.5,3:1\n"
        "attack.schedule = every:10:30\ntrain.hidden = none\n"
    )
    assert cfg.attack.trigger == ((0, 9.5), (3, 1.0))
    assert cfg.attack.schedule == Schedule("every", 10, 30)
    assert cfg.sim.hidden == ()
    assert parse_config("attack.kind = label-flip\nattack.source = all").attack.source == ALL_CLASSES


def test_overrides_win():
    cfg = parse_config("sim.seed = 3", {"sim.seed": "9"})
    assert cfg.sim.seed == 9
    with pytest.raises(ConfigError):
        parse_config("", {"sim.nope": "1"})


def test_theory_defaults_follow_model():
    t = defaults().theory
    assert t.n_params == 100 * 64 + 64 + 64 * 32 + 32 + 32 * 2 + 2
    assert t.dimension == t.n_params


def test_dump_defaults_reparses():
    text = dump_defaults()
    assert len(text.splitlines()) == len(SCHEMA)
    assert parse_config(text).values == defaults().values


def test_json_is_plain():
    import json

    out = parse_config("attack.schedule = once:3").to_json()
    json.dumps(out)
    assert out["attack.schedule"] == "once:3" and out["reputation.eta"] == pytest.approx(0.7)
