"""Closed-form convergence-bound terms for reputation-weighted aggregation.

These only evaluate formulas. The analytical constants (Lipschitz constant,
gradient and variance bounds, residual bound, domain radius) are user inputs;
nothing here estimates them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

# constant of the Berry-Esseen type inequality used by the bound
BERRY_ESSEEN_C = 0.4748


@dataclass(frozen=True)
class TheoryInputs:
    n_clients: int = 10
    n_params: int = 100
    attacker_fraction: float = 0.0
    range_threshold: float = 2.0
    confidence_threshold: float = 0.1
    kappa: float = 0.3
    prior: float = 0.5
    prior_weight: float = 2.0
    lipschitz: float = 1.0
    strong_convexity: float = 1.0  # kept for completeness; the bound does not use it
    lr: float = 0.01
    dimension: int = 100
    max_samples: float = 100.0
    grad_bound: float = 1.0
    var_bound: float = 1.0
    residual_sup: float = 1.0
    radius: float = 1.0
    quantile: float = 1.0
    init_distance: float = 1000.0

    @property
    def eta(self) -> float:
        return 1.0 - self.kappa

    def validate(self) -> None:
        positive = {
            "n_clients": self.n_clients,
            "n_params": self.n_params,
            "range_threshold": self.range_threshold,
            "confidence_threshold": self.confidence_threshold,
            "prior_weight": self.prior_weight,
            "lipschitz": self.lipschitz,
            "lr": self.lr,
            "dimension": self.dimension,
            "max_samples": self.max_samples,
            "radius": self.radius,
        }
        for name, value in positive.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("grad_bound", "var_bound", "residual_sup", "init_distance"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0 <= self.attacker_fraction < 0.5:
            raise ValueError("attacker_fraction must be in [0, 0.5)")
        if not 0 < self.kappa < 1:
            raise ValueError("kappa must be in (0, 1)")
        if not 0 <= self.prior <= 1:
            raise ValueError("prior must be in [0, 1]")
        if self.lr * self.lipschitz >= 1:
            raise ValueError("need lr < 1 / lipschitz")


def d_epsilon(quantile: float) -> float:
    return math.sqrt(2 * math.pi) * math.exp(0.5 * quantile**2)


def delta1(p: TheoryInputs) -> float:
    m, n = p.n_clients, p.n_params
    w, a, k, e = p.prior_weight, p.prior, p.kappa, p.eta
    numerator = m * (p.range_threshold * (m - 1) + 2 * p.residual_sup / (math.sqrt(m) * p.confidence_threshold))
    reputation_term = w * a * (m - 1) * (k * n + w) / ((e * n + w) * (k * n + w * a))
    return numerator / (reputation_term + 1)


def delta2(p: TheoryInputs) -> float:
    m, q = p.n_clients, p.max_samples
    honest = math.sqrt(p.dimension * math.log(1 + q * m * p.lipschitz * p.radius) / (m * (1 - p.attacker_fraction)))
    spread = honest + BERRY_ESSEEN_C * p.grad_bound / math.sqrt(q) + p.attacker_fraction
    return 2 * math.sqrt(2) / (m * q) + math.sqrt(2 / q) * d_epsilon(p.quantile) * p.var_bound * spread


def min_iterations(p: TheoryInputs, d1: float | None = None, d2: float | None = None) -> int:
    """Rounds after which the contraction term is below the noise floor."""
    d1 = delta1(p) if d1 is None else d1
    d2 = delta2(p) if d2 is None else d2
    rate = p.lipschitz * p.lr
    if not 0 < rate < 1:
        raise ValueError("need 0 < lipschitz * lr < 1")
    floor = math.sqrt(p.n_params) * d1 + d2
    if floor <= 0:
        raise ValueError("bound floor must be positive")
    ratio = p.lipschitz * p.init_distance / floor
    if ratio <= 1:
        return 0
    return max(0, math.ceil(math.log(ratio) / rate))


def error_rate_terms(p: TheoryInputs) -> dict[str, float]:
    """The six order-of-magnitude terms whose sum controls the final error."""
    n, m, q = p.n_params, p.n_clients, p.max_samples
    return {
        "range": p.range_threshold / (p.prior * p.kappa * p.prior_weight * math.sqrt(n)) if p.prior > 0 else math.inf,
        "reward": 1 / (p.kappa * math.sqrt(n)),
        "confidence": 1 / (math.sqrt(m) * p.confidence_threshold),
        "samples": 1 / q,
        "attackers": p.attacker_fraction / math.sqrt(q),
        "pooled": 1 / math.sqrt(q * m),
    }


def bound_summary(p: TheoryInputs) -> dict:
    p.validate()
    d1, d2 = delta1(p), delta2(p)
    return {
        "inputs": asdict(p),
        "delta1": d1,
        "delta2": d2,
        "d_epsilon": d_epsilon(p.quantile),
        "normalized_delta1": d1 / math.sqrt(p.n_params),
        "error_rate_terms": error_rate_terms(p),
        "min_iterations": min_iterations(p, d1, d2),
    }
