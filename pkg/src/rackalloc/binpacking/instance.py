"""Batched bin packing instances: T batches of q items, integer sizes."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

SCHEMA = "batched-packing/1"


@dataclass(frozen=True)
class UniformSizes:
    """Item sizes uniform on {lo, ..., hi}."""

    lo: int = 0
    hi: int = 100

    def sample_batch(self, rng: np.random.Generator, q: int) -> tuple[int, ...]:
        return tuple(int(v) for v in rng.integers(self.lo, self.hi + 1, q))

    def mean_size(self) -> float:
        return (self.lo + self.hi) / 2.0

    def to_json(self) -> dict:
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}

    @staticmethod
    def from_json(data: dict) -> "UniformSizes":
        return UniformSizes(data["lo"], data["hi"])


class BatchedPackingInstance:
    """T batches of q items with bin capacity B.

    Size-0 items are legal draws but occupy no packing arc; they are dropped
    at ingestion (logged) and never reach the models.
    """

    def __init__(
        self,
        T: int,
        q: int,
        bin_capacity: int = 100,
        sizes: UniformSizes = UniformSizes(),
        seed: int | None = None,
        batches: list[tuple[int, ...]] | None = None,
    ):
        self.T = T
        self.q = q
        self.bin_capacity = int(bin_capacity)
        self.sizes = sizes
        self.seed = seed
        self._batches = None
        if batches is not None:
            self._batches = [self._ingest(b) for b in batches]

    def _ingest(self, batch) -> tuple[int, ...]:
        kept = tuple(int(s) for s in batch if s > 0)
        dropped = len(batch) - len(kept)
        if dropped:
            logger.info("dropped %d zero-size items at ingestion", dropped)
        bad = [s for s in kept if s > self.bin_capacity]
        if bad:
            raise ValueError(f"item sizes above bin capacity: {bad[:3]}")
        return kept

    def batches(self) -> list[tuple[int, ...]]:
        if self._batches is None:
            if self.seed is None:
                raise ValueError("instance has neither explicit batches nor a seed")
            rng = np.random.default_rng(self.seed)
            self._batches = [
                self._ingest(self.sizes.sample_batch(rng, self.q)) for _ in range(self.T)
            ]
        return self._batches

    def total_items(self) -> int:
        return sum(len(b) for b in self.batches())

    def to_json(self, explicit: bool = False) -> str:
        doc = {
            "schema": SCHEMA,
            "T": self.T,
            "q": self.q,
            "bin_capacity": self.bin_capacity,
            "sizes": self.sizes.to_json(),
        }
        if explicit or self.seed is None:
            doc["batches"] = [list(b) for b in self.batches()]
        else:
            doc["seed"] = self.seed
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BatchedPackingInstance":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported schema {doc.get('schema')!r}")
        return BatchedPackingInstance(
            doc["T"],
            doc["q"],
            doc["bin_capacity"],
            UniformSizes.from_json(doc["sizes"]),
            seed=doc.get("seed"),
            batches=[tuple(b) for b in doc["batches"]] if "batches" in doc else None,
        )
