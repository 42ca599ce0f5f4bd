"""Demand requests and the configurable batch sampler.

The deployed pipeline pulls demand from internal historical distributions;
this artifact substitutes parametric stand-ins: a categorical rack count
and truncated lognormal power/cooling per rack, all overridable in config.
Rewards are a constant (200 by default) so secondary objectives stay
secondary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

SCHEMA = "demand-config/1"


@dataclass(frozen=True)
class DemandRequest:
    id: str
    racks: int  # n_i
    power: float  # rho_i, per rack
    cooling: float  # gamma_i, per rack
    reward: float

    def __post_init__(self):
        if self.racks < 1:
            raise ValueError("a request needs at least one rack")
        if self.power < 0 or self.cooling < 0:
            raise ValueError("power and cooling must be nonnegative")

    def signature(self) -> tuple:
        return (self.racks, round(self.power, 12), round(self.cooling, 12), self.reward)


@dataclass(frozen=True)
class TruncatedLognormal:
    mu: float
    sigma: float
    lo: float
    hi: float

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.clip(rng.lognormal(self.mu, self.sigma, size), self.lo, self.hi)

    def mean(self) -> float:
        """Mean of the clipped lognormal (mass at the clip points included)."""
        ln_lo, ln_hi = math.log(self.lo), math.log(self.hi)
        z_lo = (ln_lo - self.mu) / self.sigma
        z_hi = (ln_hi - self.mu) / self.sigma
        inner = math.exp(self.mu + self.sigma**2 / 2) * (
            stats.norm.cdf(z_hi - self.sigma) - stats.norm.cdf(z_lo - self.sigma)
        )
        return float(
            self.lo * stats.norm.cdf(z_lo)
            + inner
            + self.hi * (1 - stats.norm.cdf(z_hi))
        )

    def to_json(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "lo": self.lo, "hi": self.hi}

    @staticmethod
    def from_json(d: dict) -> "TruncatedLognormal":
        return TruncatedLognormal(d["mu"], d["sigma"], d["lo"], d["hi"])


@dataclass(frozen=True)
class DemandConfig:
    rack_counts: tuple[int, ...] = (1, 2, 4, 8)
    rack_probs: tuple[float, ...] = (0.35, 0.25, 0.25, 0.15)
    power: TruncatedLognormal = field(default_factory=lambda: TruncatedLognormal(0.3, 0.5, 0.3, 3.5))
    cooling: TruncatedLognormal = field(default_factory=lambda: TruncatedLognormal(1.3, 0.55, 1.0, 12.0))
    reward: float = 200.0
    batch_size: int = 5

    def __post_init__(self):
        if len(self.rack_counts) != len(self.rack_probs):
            raise ValueError("rack count values and probabilities must align")
        if abs(sum(self.rack_probs) - 1.0) > 1e-9:
            raise ValueError("rack count probabilities must sum to 1")

    def mean_racks(self) -> float:
        return float(np.dot(self.rack_counts, self.rack_probs))

    def mean_request_power(self) -> float:
        """Expected total power of one request: E[n] * E[rho]."""
        return self.mean_racks() * self.power.mean()

    def mean_request(self, request_id: str = "mean") -> DemandRequest:
        return DemandRequest(
            id=request_id,
            racks=max(1, int(round(self.mean_racks()))),
            power=self.power.mean(),
            cooling=self.cooling.mean(),
            reward=self.reward,
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": SCHEMA,
                "rack_counts": list(self.rack_counts),
                "rack_probs": list(self.rack_probs),
                "power": self.power.to_json(),
                "cooling": self.cooling.to_json(),
                "reward": self.reward,
                "batch_size": self.batch_size,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "DemandConfig":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {d.get('schema')!r}")
        return DemandConfig(
            tuple(d["rack_counts"]),
            tuple(d["rack_probs"]),
            TruncatedLognormal.from_json(d["power"]),
            TruncatedLognormal.from_json(d["cooling"]),
            d["reward"],
            d["batch_size"],
        )


def sample_demand(
    config: DemandConfig, rng: np.random.Generator, batch_size: int | None = None, prefix: str = "req"
) -> tuple[DemandRequest, ...]:
    """One i.i.d. batch of requests; batch size must be positive."""
    size = config.batch_size if batch_size is None else batch_size
    if size < 1:
        raise ValueError("batch size must be at least 1")
    racks = rng.choice(config.rack_counts, size=size, p=config.rack_probs)
    power = config.power.sample(rng, size)
    cooling = config.cooling.sample(rng, size)
    return tuple(
        DemandRequest(
            id=f"{prefix}{i}",
            racks=int(racks[i]),
            power=float(power[i]),
            cooling=float(cooling[i]),
            reward=config.reward,
        )
        for i in range(size)
    )
