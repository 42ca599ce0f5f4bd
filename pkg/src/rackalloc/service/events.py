"""Append-only session events and the replay reducer.

A session's state is exactly what replaying its event log produces; the
live objects are caches. Rejected events must carry one of the fixed
reason categories (free text rides along under ``other``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

REJECTION_REASONS = (
    "engineering_group",
    "power_balancing",
    "already_reserved",
    "multi_availability",
    "better_space_packing",
    "other",
)

EVENT_KINDS = (
    "session_created",
    "batch_arrived",
    "suggested",
    "accepted",
    "rejected",
    "manual_placed",
    "rolled_back",
    "session_closed",
)


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    timestamp: float
    kind: str
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "rejected":
            reason = self.payload.get("reason")
            if reason not in REJECTION_REASONS:
                raise ValueError(f"rejected event needs a reason, got {reason!r}")
        if self.kind in ("accepted", "manual_placed") and "suggestion_id" not in self.payload:
            raise ValueError(f"{self.kind} event must reference a suggestion")

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "timestamp": self.timestamp,
                "kind": self.kind,
                "payload": self.payload,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "SessionEvent":
        d = json.loads(text)
        return SessionEvent(d["seq"], d["timestamp"], d["kind"], d.get("payload", {}))


class EventLog:
    """In-memory event list with optional JSONL persistence."""

    def __init__(self, path: Path | None = None):
        self.path = path
        self.events: list[SessionEvent] = []
        if path is not None and path.exists():
            for ln in path.read_text().splitlines():
                if ln.strip():
                    self.events.append(SessionEvent.from_json(ln))

    def append(self, event: SessionEvent) -> None:
        if self.events and event.seq != self.events[-1].seq + 1:
            raise ValueError("event sequence must be contiguous")
        if not self.events and event.seq != 0:
            raise ValueError("first event must have seq 0")
        self.events.append(event)
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(event.to_json() + "\n")

    def __iter__(self) -> Iterable[SessionEvent]:
        return iter(self.events)

    def __len__(self) -> int:
        return len(self.events)
