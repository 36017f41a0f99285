"""Flat ``section.key = value`` configuration with defaults for every key."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .aggregators import AggregatorKind
from .attacks import ALL_CLASSES, AttackConfig, Schedule
from .datagen import DataSpec
from .reputation import ReputationConfig
from .robust import RobustConfig
from .simulator import SimConfig
from .theory import TheoryInputs


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    text = text.strip()
    if text in ("", "none"):
        return ()
    return tuple(int(v) for v in text.split(","))


def _trigger(text: str) -> tuple[tuple[int, float], ...]:
    """``idx:value,idx:value``; empty means the data-derived default."""
    text = text.strip()
    if not text:
        return ()
    out = []
    for item in text.split(","):
        idx, value = item.split(":")
        out.append((int(idx), float(value)))
    return tuple(out)


def _class_or_all(text: str) -> int:
    text = text.strip()
    return ALL_CLASSES if text == "all" else int(text)


def _str(text: str) -> str:
    return text.strip()


# key -> (parser, default text)
SCHEMA: dict[str, tuple[Callable[[str], Any], str]] = {
    "sim.clients": (int, "10"),
    "sim.rounds": (int, "100"),
    "sim.aggregator": (_str, "reputation"),
    "sim.trim_beta": (int, "1"),
    "sim.iota": (float, "0.9"),
    "sim.test_fraction": (float, "0.2"),
    "sim.seed": (int, "0"),
    "sim.pretrain_epochs": (int, "0"),
    "train.lr": (float, "0.01"),
    "train.epochs": (int, "10"),
    "train.batch_size": (int, "64"),
    "train.hidden": (_int_list, "64,32"),
    "robust.range_threshold": (float, "2"),
    "robust.confidence_threshold": (float, "0.1"),
    "robust.lam": (float, "2"),
    "robust.residual_eps": (float, "1e-12"),
    "robust.max_rescale_iter": (int, "100"),
    "reputation.kappa": (float, "0.3"),
    "reputation.prior": (float, "0.5"),
    "reputation.prior_weight": (float, "2"),
    "reputation.decay": (float, "0.5"),
    "reputation.window": (int, "10"),
    "attack.kind": (_str, "none"),
    "attack.fraction": (float, "0"),
    "attack.source": (_class_or_all, "0"),
    "attack.target": (int, "1"),
    "attack.rate": (float, "1"),
    "attack.trigger": (_trigger, ""),
    "attack.extra_epochs": (int, "5"),
    "attack.schedule": (Schedule.parse, "always"),
    "attack.stagger": (int, "0"),
    "data.csv": (_str, ""),
    "data.classes": (int, "2"),
    "data.features": (int, "100"),
    "data.per_class": (int, "500"),
    "data.separation": (float, "6"),
    "data.noise": (float, "1"),
    "data.seed": (int, "0"),
    "theory.n_params": (int, "0"),
    "theory.lipschitz": (float, "1"),
    "theory.strong_convexity": (float, "1"),
    "theory.dimension": (int, "0"),
    "theory.max_samples": (float, "100"),
    "theory.grad_bound": (float, "1"),
    "theory.var_bound": (float, "1"),
    "theory.residual_sup": (float, "1"),
    "theory.radius": (float, "1"),
    "theory.quantile": (float, "1"),
    "theory.init_distance": (float, "1000"),
}


@dataclass(frozen=True)
class ResolvedConfig:
    values: dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def robust(self) -> RobustConfig:
        v = self.values
        return RobustConfig(
            v["robust.range_threshold"],
            v["robust.confidence_threshold"],
            v["robust.lam"],
            v["robust.residual_eps"],
            v["robust.max_rescale_iter"],
        )

    @property
    def reputation(self) -> ReputationConfig:
        v = self.values
        return ReputationConfig(
            v["reputation.kappa"], v["reputation.prior"], v["reputation.prior_weight"], v["reputation.decay"], v["reputation.window"]
        )

    @property
    def eta(self) -> float:
        return 1.0 - self.values["reputation.kappa"]

    @property
    def data(self) -> DataSpec:
        v = self.values
        return DataSpec(
            v["data.classes"], v["data.features"], v["data.per_class"], v["data.separation"], v["data.noise"], v["data.seed"]
        )

    @property
    def attack(self) -> AttackConfig:
        v = self.values
        return AttackConfig(
            kind=v["attack.kind"],
            fraction=v["attack.fraction"],
            source=v["attack.source"],
            target=v["attack.target"],
            rate=v["attack.rate"],
            trigger=v["attack.trigger"],
            extra_epochs=v["attack.extra_epochs"],
            schedule=v["attack.schedule"],
            stagger=v["attack.stagger"],
        )

    @property
    def sim(self) -> SimConfig:
        v = self.values
        return SimConfig(
            n_clients=v["sim.clients"],
            rounds=v["sim.rounds"],
            aggregator=AggregatorKind(v["sim.aggregator"], v["sim.trim_beta"], self.robust, self.reputation),
            lr=v["train.lr"],
            epochs=v["train.epochs"],
            batch_size=v["train.batch_size"],
            hidden=v["train.hidden"],
            data=self.data,
            csv_path=v["data.csv"] or None,
            iota=v["sim.iota"],
            pretrain_epochs=v["sim.pretrain_epochs"],
            attack=self.attack,
            test_fraction=v["sim.test_fraction"],
            seed=v["sim.seed"],
        )

    @property
    def theory(self) -> TheoryInputs:
        v = self.values
        sizes = [v["data.features"], *v["train.hidden"], v["data.classes"]]
        model_size = sum(i * o + o for i, o in zip(sizes[:-1], sizes[1:]))
        n_params = v["theory.n_params"] or model_size
        return TheoryInputs(
            n_clients=v["sim.clients"],
            n_params=n_params,
            attacker_fraction=v["attack.fraction"],
            range_threshold=v["robust.range_threshold"],
            confidence_threshold=v["robust.confidence_threshold"],
            kappa=v["reputation.kappa"],
            prior=v["reputation.prior"],
            prior_weight=v["reputation.prior_weight"],
            lipschitz=v["theory.lipschitz"],
            strong_convexity=v["theory.strong_convexity"],
            lr=v["train.lr"],
            dimension=v["theory.dimension"] or n_params,
            max_samples=v["theory.max_samples"],
            grad_bound=v["theory.grad_bound"],
            var_bound=v["theory.var_bound"],
            residual_sup=v["theory.residual_sup"],
            radius=v["theory.radius"],
            quantile=v["theory.quantile"],
            init_distance=v["theory.init_distance"],
        )

    def to_json(self) -> dict[str, Any]:
        out = {}
        for key, value in sorted(self.values.items()):
            if isinstance(value, Schedule):
                value = str(value)
            elif isinstance(value, tuple):
                value = [list(v) if isinstance(v, tuple) else v for v in value]
            out[key] = value
        out["reputation.eta"] = self.eta
        return out


def _check(resolved: ResolvedConfig, lines: dict[str, int]) -> None:
    """Build every typed section so constraint violations surface with the key's line."""

    def where(*keys: str) -> str:
        found = [f"{k} (line {lines[k]})" for k in keys if k in lines]
        return ", ".join(found) if found else ", ".join(keys) + " (default)"

    checks = [
        (("robust.range_threshold", "robust.confidence_threshold", "robust.lam", "robust.max_rescale_iter"), lambda: resolved.robust),
        (("reputation.kappa", "reputation.prior", "reputation.prior_weight", "reputation.decay", "reputation.window"), lambda: resolved.reputation),
        (("data.classes", "data.features", "data.per_class", "data.noise"), lambda: resolved.data),
        (("attack.kind", "attack.fraction", "attack.rate", "attack.source", "attack.target", "attack.extra_epochs", "attack.stagger"), lambda: resolved.attack),
        (("sim.aggregator",), lambda: resolved.sim),
        (
            ("sim.clients", "sim.rounds", "sim.trim_beta", "sim.iota", "sim.test_fraction", "sim.pretrain_epochs", "train.lr", "train.epochs", "train.batch_size", "train.hidden"),
            lambda: resolved.sim.validate(),
        ),
    ]
    for keys, build in checks:
        try:
            build()
        except ValueError as exc:
            raise ConfigError(f"{where(*keys)}: {exc}") from None


def parse_config(text: str, overrides: dict[str, str] | None = None) -> ResolvedConfig:
    """Parse config text; every absent key takes its default.

    ``reputation.eta`` is never read: it is always ``1 - reputation.kappa``.
    """
    raw = {key: default for key, (_, default) in SCHEMA.items()}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        if key not in SCHEMA:
            raise ConfigError(f"override: unknown key {key!r}")
        raw[key] = value

    values = {}
    for key, text_value in raw.items():
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(text_value)
        except (ValueError, TypeError) as exc:
            at = f"line {lines[key]}" if key in lines else "override"
            raise ConfigError(f"{at}: cannot parse {key}={text_value!r} ({exc})") from None
    resolved = ResolvedConfig(values)
    _check(resolved, lines)
    return resolved


def defaults() -> ResolvedConfig:
    return parse_config("")


def dump_defaults() -> str:
    return "\n".join(f"{key} = {default}" for key, (_, default) in SCHEMA.items()) + "\n"


__all__ = ["ConfigError", "ResolvedConfig", "SCHEMA", "parse_config", "defaults", "dump_defaults"]
