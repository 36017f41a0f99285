import pytest

from repfl.aggregators import AggregatorKind
from repfl.datagen import DataSpec
from repfl.simulator import SimConfig

SMALL_CONFIG_TEXT = """\
sim.clients = 5
sim.rounds = 3
train.epochs = 2
train.hidden = 8
data.features = 10
data.per_class = 60
"""


@pytest.fixture
def small_config():
    return SimConfig(
        n_clients=5,
        rounds=3,
        aggregator=AggregatorKind("reputation"),
        epochs=2,
        hidden=(8,),
        data=DataSpec(n_features=10, per_class=60),
    )


@pytest.fixture
def small_config_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL_CONFIG_TEXT)
    return path


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(test_acceptance.RESULTS):
        ok, detail = test_acceptance.RESULTS[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
