"""Synchronous federated training rounds with optional poisoning clients."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .aggregators import AggregatorKind, UpdateMatrix, aggregate
from .attacks import AttackConfig, apply_trigger, choose_attackers, default_trigger, poison, schedule_active
from .datagen import Dataset, DataSpec, dirichlet_partition, load_csv, stratified_split, synth_dataset
from .model import ModelParams, TrainConfig, init_params, layer_sizes, local_train, mean_nll, predict
from .reputation import ClientReputation

log = logging.getLogger(__name__)


def derive_seed(master: int, *keys: int | str) -> int:
    """Independent 63-bit seed for a (purpose, round, client, ...) key."""
    words = [master] + [k if isinstance(k, int) else int.from_bytes(k.encode(), "little") for k in keys]
    return int(np.random.SeedSequence(words).generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class SimConfig:
    n_clients: int = 10
    rounds: int = 100
    aggregator: AggregatorKind = field(default_factory=AggregatorKind)
    lr: float = 0.01
    epochs: int = 10
    batch_size: int = 64
    hidden: tuple[int, ...] = (64, 32)
    data: DataSpec = field(default_factory=DataSpec)
    csv_path: str | None = None
    iota: float = 0.9
    pretrain_epochs: int = 0
    attack: AttackConfig = field(default_factory=AttackConfig)
    test_fraction: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if self.n_clients < 1:
            raise ValueError("n_clients must be >= 1")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must be in (0, 1)")
        if self.iota <= 0:
            raise ValueError("iota must be positive")
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be >= 0")
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be >= 1")
        TrainConfig(self.lr, self.epochs, self.batch_size)
        self.aggregator.validate(self.n_clients)


@dataclass(frozen=True)
class ClientRound:
    client: int
    positive: int
    negative: int
    reputation: float
    windowed: float
    normalized: float
    weight: float


@dataclass(frozen=True)
class RoundReport:
    round: int
    accuracy: float
    asr: float
    loss: float
    attack_active: bool
    clients: tuple[ClientRound, ...] = ()


def evaluate_accuracy(params: ModelParams, test: Dataset) -> float:
    if len(test) == 0:
        raise ValueError("empty test set")
    return float(np.mean(predict(params, test.features) == test.labels))


def attack_success_rate(params: ModelParams, test: Dataset, attack: AttackConfig) -> float:
    """Share of attacked test samples the model assigns to the attacker's target.

    Label flipping attacks the true source-class samples; a backdoor attacks
    every non-target sample once the trigger is stamped on.
    """
    if attack.kind == "label-flip":
        feats = test.features[test.labels == attack.attacked_class(test.n_classes)]
    elif attack.kind == "backdoor":
        feats = apply_trigger(test.features[test.labels != attack.target], attack.trigger)
    else:
        raise ValueError("no attack configured")
    if len(feats) == 0:
        raise ValueError("no attacked samples in the test set")
    return float(np.mean(predict(params, feats) == attack.target))


@dataclass(frozen=True)
class SimState:
    round: int
    params: ModelParams
    reputations: tuple[ClientReputation, ...] | None = None


class Simulation:
    """Everything fixed for one experiment: data, shards, attackers, schedules."""

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        seed = config.seed
        if config.csv_path:
            dataset = load_csv(config.csv_path)
        else:
            dataset = synth_dataset(replace(config.data, seed=derive_seed(seed, "data")))
        self.train, self.test = stratified_split(dataset, config.test_fraction, derive_seed(seed, "split"))
        partition = dirichlet_partition(self.train, config.n_clients, config.iota, derive_seed(seed, "partition"))
        if partition.has_empty:
            empty = [i for i, n in enumerate(partition.sizes) if n == 0]
            raise ValueError(f"partition left clients {empty} without training data; change seed or iota")
        self.shards = partition.shards

        attack = config.attack
        if attack.kind == "backdoor" and not attack.trigger:
            attack = replace(attack, trigger=default_trigger(self.train))
        if attack.kind == "backdoor":
            for idx, _ in attack.trigger:
                if not 0 <= idx < self.train.n_features:
                    raise ValueError(f"trigger index {idx} outside feature range")
        if attack.kind != "none":
            for cls in (attack.target, attack.attacked_class(self.train.n_classes)):
                if not 0 <= cls < self.train.n_classes:
                    raise ValueError(f"attack class {cls} outside [0, {self.train.n_classes})")
        self.attack = attack
        self.attackers = (
            choose_attackers(config.n_clients, attack.fraction, derive_seed(seed, "attackers")) if attack.enabled else []
        )
        self.schedules = {a: attack.schedule.shifted(k * attack.stagger) for k, a in enumerate(self.attackers)}
        self.poisoned = {a: poison(self.shards[a], attack, derive_seed(seed, "poison", a)) for a in self.attackers}
        self.sizes = layer_sizes(self.train.n_features, self.train.n_classes, config.hidden)

    @property
    def n_params(self) -> int:
        return sum(o * i + o for i, o in zip(self.sizes[:-1], self.sizes[1:]))

    def initial_state(self) -> SimState:
        """Seeded initial model, optionally warmed up centrally on the clean training pool."""
        cfg = self.config
        params = init_params(self.sizes, derive_seed(cfg.seed, "init"))
        if cfg.pretrain_epochs:
            warmup = TrainConfig(cfg.lr, cfg.pretrain_epochs, cfg.batch_size, derive_seed(cfg.seed, "pretrain"))
            params = local_train(params, self.train.features, self.train.labels, warmup)
        return SimState(0, params)

    def active_attackers(self, t: int) -> list[int]:
        return [a for a in self.attackers if schedule_active(self.schedules[a], t)]

    def client_update(self, params: ModelParams, client: int, t: int, poisoned: bool) -> ModelParams:
        cfg = self.config
        shard = self.poisoned[client] if poisoned else self.shards[client]
        epochs = cfg.epochs + (self.attack.extra_epochs if poisoned else 0)
        train_cfg = TrainConfig(cfg.lr, epochs, cfg.batch_size, derive_seed(cfg.seed, "train", t, client))
        return local_train(params, shard.features, shard.labels, train_cfg)

    def run_round(self, state: SimState, t: int | None = None) -> tuple[SimState, RoundReport]:
        t = state.round + 1 if t is None else t
        active = set(self.active_attackers(t))
        shapes = state.params.shapes
        rows = np.stack(
            [self.client_update(state.params, i, t, i in active).flatten() for i in range(self.config.n_clients)]
        )
        updates = UpdateMatrix(rows, np.array([len(s) for s in self.shards]))
        vector, rep = aggregate(self.config.aggregator, updates, state.reputations, t)
        params = ModelParams.unflatten(vector, shapes)

        clients: tuple[ClientRound, ...] = ()
        reputations = None
        if rep is not None:
            reputations = tuple(rep.states)
            clients = tuple(
                ClientRound(i, int(rep.positive[i]), int(rep.negative[i]), s.last.reputation, s.windowed, s.normalized, s.weight)
                for i, s in enumerate(rep.states)
            )
        report = RoundReport(
            round=t,
            accuracy=evaluate_accuracy(params, self.test),
            asr=attack_success_rate(params, self.test, self.attack) if self.attack.kind != "none" else 0.0,
            loss=mean_nll(params, self.train.features, self.train.labels),
            attack_active=bool(active),
            clients=clients,
        )
        return SimState(t, params, reputations), report

    def iter_rounds(self) -> Iterator[RoundReport]:
        state = self.initial_state()
        for t in range(1, self.config.rounds + 1):
            state, report = self.run_round(state, t)
            log.debug("round %d acc=%.4f asr=%.4f", t, report.accuracy, report.asr)
            yield report


def run_experiment(config: SimConfig, on_report: Callable[[RoundReport], None] | None = None) -> list[RoundReport]:
    sim = Simulation(config)
    reports = []
    for report in sim.iter_rounds():
        reports.append(report)
        if on_report is not None:
            on_report(report)
    return reports
