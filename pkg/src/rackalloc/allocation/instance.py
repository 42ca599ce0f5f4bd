"""Online resource allocation instances and their stage distributions.

A stage is a pair ``(r, A)``: rewards per supply node (length m) and the
consumption matrix (m x d). Stage draws are i.i.d. across the horizon.
Instances serialize to a versioned JSON schema carrying either the
distribution spec plus seed or the explicit stage data.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SCHEMA = "resource-alloc/1"


@dataclass(frozen=True)
class StageSample:
    rewards: np.ndarray  # (m,)
    consumption: np.ndarray  # (m, d)

    def key(self) -> tuple:
        """Lexicographic canonicalization key (stage ordering in models)."""
        return tuple(self.rewards.tolist()) + tuple(self.consumption.ravel().tolist())


@dataclass(frozen=True)
class BimodalSpec:
    """Two triangular modes of width 0.5 centered at 0.5 +- separation.

    Entries are drawn on the True cells of ``mask`` (m x d) and clipped to
    [0, 1]; separation 0 degenerates to the single central mode. Rewards
    are the constant 1.
    """

    m: int
    d: int
    separation: float  # psi in [0, 0.25]
    mask: tuple[tuple[bool, ...], ...]  # (m, d) support pattern

    def __post_init__(self):
        if not 0.0 <= self.separation <= 0.25:
            raise ValueError("separation must lie in [0, 0.25]")

    def _mask_array(self) -> np.ndarray:
        return np.asarray(self.mask, dtype=bool)

    def sample(self, rng: np.random.Generator) -> StageSample:
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> list[StageSample]:
        mask = self._mask_array()
        shape = (n,) + mask.shape
        centers = np.where(rng.random(shape) < 0.5, 0.5 - self.separation, 0.5 + self.separation)
        vals = rng.triangular(centers - 0.25, centers, centers + 0.25)
        A = np.where(mask[None], np.clip(vals, 0.0, 1.0), 0.0)
        ones = np.ones(self.m)
        return [StageSample(ones, A[i]) for i in range(n)]

    def mean(self) -> StageSample:
        mask = self._mask_array()
        return StageSample(np.ones(self.m), np.where(mask, 0.5, 0.0))

    def discrete_support(self):
        return None

    def to_json(self) -> dict:
        return {
            "kind": "bimodal",
            "m": self.m,
            "d": self.d,
            "separation": self.separation,
            "mask": [[bool(v) for v in row] for row in self.mask],
        }


@dataclass(frozen=True)
class RewardMixSpec:
    """Unit consumption with a two-point reward: high with probability p."""

    m: int
    d: int
    p_high: float
    high: float
    low: float

    def sample(self, rng: np.random.Generator) -> StageSample:
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> list[StageSample]:
        rewards = np.where(rng.random(n) < self.p_high, self.high, self.low)
        A = np.ones((self.m, self.d))
        return [StageSample(np.full(self.m, rewards[i]), A) for i in range(n)]

    def mean(self) -> StageSample:
        r = self.p_high * self.high + (1 - self.p_high) * self.low
        return StageSample(np.full(self.m, r), np.ones((self.m, self.d)))

    def discrete_support(self):
        return [
            (self.p_high, StageSample(np.full(self.m, self.high), np.ones((self.m, self.d)))),
            (1 - self.p_high, StageSample(np.full(self.m, self.low), np.ones((self.m, self.d)))),
        ]

    def to_json(self) -> dict:
        return {
            "kind": "reward-mix",
            "m": self.m,
            "d": self.d,
            "p_high": self.p_high,
            "high": self.high,
            "low": self.low,
        }


@dataclass(frozen=True)
class DiscreteColumnsSpec:
    """Finite-support consumption distribution with unit rewards.

    ``support`` is a tuple of (probability, flattened consumption matrix);
    probabilities sum to 1.
    """

    m: int
    d: int
    probs: tuple[float, ...]
    columns: tuple[tuple[float, ...], ...]  # each entry is a flattened (m, d)

    def __post_init__(self):
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise ValueError("support probabilities must sum to 1")

    def _mats(self) -> list[np.ndarray]:
        return [np.asarray(c, dtype=float).reshape(self.m, self.d) for c in self.columns]

    def sample(self, rng: np.random.Generator) -> StageSample:
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> list[StageSample]:
        ks = rng.choice(len(self.probs), size=n, p=np.asarray(self.probs))
        mats = self._mats()
        ones = np.ones(self.m)
        return [StageSample(ones, mats[k]) for k in ks]

    def mean(self) -> StageSample:
        mats = self._mats()
        mean_A = sum(p * a for p, a in zip(self.probs, mats))
        return StageSample(np.ones(self.m), mean_A)

    def discrete_support(self):
        return [
            (p, StageSample(np.ones(self.m), a))
            for p, a in zip(self.probs, self._mats())
        ]

    def to_json(self) -> dict:
        return {
            "kind": "discrete-columns",
            "m": self.m,
            "d": self.d,
            "probs": list(self.probs),
            "columns": [list(c) for c in self.columns],
        }


def spec_from_json(data: dict):
    kind = data["kind"]
    if kind == "bimodal":
        return BimodalSpec(
            data["m"],
            data["d"],
            data["separation"],
            tuple(tuple(bool(v) for v in row) for row in data["mask"]),
        )
    if kind == "reward-mix":
        return RewardMixSpec(data["m"], data["d"], data["p_high"], data["high"], data["low"])
    if kind == "discrete-columns":
        return DiscreteColumnsSpec(
            data["m"],
            data["d"],
            tuple(data["probs"]),
            tuple(tuple(c) for c in data["columns"]),
        )
    raise ValueError(f"unknown distribution kind {kind!r}")


class ResourceAllocInstance:
    """Horizon, capacities, stage distribution, and the realized stage data.

    Stage data is drawn once from ``seed`` and cached; ``stages()`` is what
    every policy sees, so one instance can be replayed across policies and
    sampling seeds.
    """

    def __init__(
        self,
        T: int,
        m: int,
        d: int,
        capacities: Sequence[float],
        dist,
        seed: int | None = None,
        stages: list[StageSample] | None = None,
        name: str = "",
    ):
        b = np.asarray(capacities, dtype=float)
        if b.shape != (d,):
            raise ValueError("capacities must have length d")
        if np.any(b <= 0):
            raise ValueError("capacities must be positive")
        self.T = T
        self.m = m
        self.d = d
        self.capacities = b
        self.dist = dist
        self.seed = seed
        self.name = name
        self._stages = stages

    def stages(self) -> list[StageSample]:
        if self._stages is None:
            if self.seed is None:
                raise ValueError("instance has neither explicit stages nor a seed")
            rng = np.random.default_rng(self.seed)
            self._stages = [self.dist.sample(rng) for _ in range(self.T)]
        for s in self._stages:
            if np.any(s.consumption < 0):
                raise ValueError("negative consumption entry")
        return self._stages

    def normalize(self) -> "ResourceAllocInstance":
        """Rescales rows so every capacity equals the common budget B.

        B = min_k b_k / max_{t,j} A_jk; each resource row is scaled by
        B / b_k, which preserves the feasible set exactly.
        """
        stages = self.stages()
        maxA = np.zeros(self.d)
        for s in stages:
            maxA = np.maximum(maxA, s.consumption.max(axis=0))
        maxA_overall = maxA.max()
        if maxA_overall <= 0:
            return self
        B = float(np.min(self.capacities / np.where(maxA > 0, maxA, maxA_overall)))
        scale = B / self.capacities
        new_stages = [
            StageSample(s.rewards.copy(), s.consumption * scale[None, :]) for s in stages
        ]
        return ResourceAllocInstance(
            self.T,
            self.m,
            self.d,
            np.full(self.d, B),
            self.dist,
            seed=None,
            stages=new_stages,
            name=self.name + "+normalized",
        )

    def to_json(self, explicit: bool = False) -> str:
        doc = {
            "schema": SCHEMA,
            "name": self.name,
            "T": self.T,
            "m": self.m,
            "d": self.d,
            "capacities": self.capacities.tolist(),
        }
        if explicit or self.seed is None:
            doc["stages"] = [
                {"rewards": s.rewards.tolist(), "consumption": s.consumption.tolist()}
                for s in self.stages()
            ]
            doc["distribution"] = self.dist.to_json()
        else:
            doc["distribution"] = self.dist.to_json()
            doc["seed"] = self.seed
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ResourceAllocInstance":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {doc.get('schema')!r}")
        dist = spec_from_json(doc["distribution"])
        stages = None
        if "stages" in doc:
            stages = [
                StageSample(
                    np.asarray(s["rewards"], dtype=float),
                    np.asarray(s["consumption"], dtype=float),
                )
                for s in doc["stages"]
            ]
        return ResourceAllocInstance(
            doc["T"],
            doc["m"],
            doc["d"],
            doc["capacities"],
            dist,
            seed=doc.get("seed"),
            stages=stages,
            name=doc.get("name", ""),
        )
