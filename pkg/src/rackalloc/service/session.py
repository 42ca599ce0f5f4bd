"""Placement sessions: one optimization-assisted workflow per data center.

Each batch submission runs one sampling-policy stage over a moving horizon
with the production tie-breakers and returns per-request suggestions. The
operator accepts, rejects with a reason, or places manually; manual
placements are validated against the capacity rules but never overridden.
Suggestions expire when a newer batch arrives (their state is stale).

Writes are serialized per session; a decision that loses a race gets a
conflict error. Replaying the event log from an empty state reproduces the
live state exactly (asserted after every mutation in test mode).
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from ..milp import SolveLimits, SolveStatus, solve
from ..rackplacement import (
    DataCenterTopology,
    DemandConfig,
    DemandRequest,
    PlacementObjectiveConfig,
    PlacementState,
    gen_simulated_topology,
    moving_horizon_length,
    power_stranding,
)
from ..rackplacement.model import build_placement_ip, can_place
from ..rackplacement.state import PlacementError
from .events import REJECTION_REASONS, EventLog, SessionEvent


class ConflictError(RuntimeError):
    """The referenced suggestion was already decided or has expired."""


class ValidationFailure(ValueError):
    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class SessionConfig:
    sample_paths: int = 1
    time_limit: float = 240.0  # production uses a four-minute cap
    relative_gap: float = 0.01
    max_horizon: int = 8  # cap on sampled future periods
    default_horizon: int = 4
    secondary: bool = True
    demand: DemandConfig = field(default_factory=DemandConfig)
    sampling_seed: int = 2024
    test_mode: bool = False  # verify replay after every mutation

    def to_json(self) -> dict:
        return {
            "sample_paths": self.sample_paths,
            "time_limit": self.time_limit,
            "relative_gap": self.relative_gap,
            "max_horizon": self.max_horizon,
            "default_horizon": self.default_horizon,
            "secondary": self.secondary,
            "demand": self.demand.to_json(),
            "sampling_seed": self.sampling_seed,
            "test_mode": self.test_mode,
        }


@dataclass
class Suggestion:
    id: str
    request: DemandRequest
    row: str | None  # None = the engine found no feasible placement
    group_counts: dict[str, int] | None
    reject_reason: str | None  # engine-side explanation when row is None
    status: str = "pending"  # pending | accepted | rejected | manual | expired


def _request_payload(req: DemandRequest) -> dict:
    return {
        "id": req.id,
        "racks": req.racks,
        "power": req.power,
        "cooling": req.cooling,
        "reward": req.reward,
    }


def _request_from_payload(d: dict) -> DemandRequest:
    return DemandRequest(d["id"], d["racks"], d["power"], d["cooling"], d["reward"])


class PlacementSession:
    def __init__(
        self,
        session_id: str,
        topology: DataCenterTopology,
        config: SessionConfig,
        log: EventLog,
    ):
        self.id = session_id
        self.topology = topology
        self.config = config
        self.log = log
        self.lock = threading.Lock()
        self.state = PlacementState(topology)
        self.suggestions: dict[str, Suggestion] = {}
        self.status = "open"
        self.version = 0
        self.rng = np.random.default_rng(config.sampling_seed)
        self._batch_counter = 0
        if len(log) == 0:
            self._append("session_created", {"topology_hash": hash(topology.to_json()) & 0xFFFFFFFF})
        else:
            self._replay_into_self()

    # --- event plumbing ---------------------------------------------------
    def _append(self, kind: str, payload: dict) -> SessionEvent:
        ev = SessionEvent(len(self.log), time.time(), kind, payload)
        self.log.append(ev)
        self.version += 1
        if self.config.test_mode:
            self.verify_replay()
        return ev

    def _replay_into_self(self) -> None:
        state, suggestions, status, batches = replay(self.topology, self.log)
        self.state = state
        self.suggestions = suggestions
        self.status = status
        self._batch_counter = batches
        self.version = len(self.log)

    def verify_replay(self) -> None:
        state, suggestions, status, _ = replay(self.topology, self.log)
        state.verify_consistency()
        if not np.allclose(state.occupancy, self.state.occupancy, atol=1e-9):
            raise AssertionError("replayed occupancy differs from live state")
        live = {(s.id, s.status) for s in self.suggestions.values()}
        replayed = {(s.id, s.status) for s in suggestions.values()}
        if live != replayed:
            raise AssertionError("replayed suggestions differ from live state")
        if status != self.status:
            raise AssertionError("replayed status differs from live state")

    # --- operations ---------------------------------------------------------
    def submit_batch(self, requests: list[DemandRequest]) -> list[Suggestion]:
        with self.lock:
            if self.status != "open":
                raise ConflictError("session is closed")
            if not requests:
                raise ValidationFailure(["batch must contain at least one request"])
            self._batch_counter += 1
            batch_id = f"b{self._batch_counter}"
            # a newer batch invalidates whatever is still pending
            expired = [s for s in self.suggestions.values() if s.status == "pending"]
            for s in expired:
                s.status = "expired"
            self._append(
                "batch_arrived",
                {
                    "batch_id": batch_id,
                    "requests": [_request_payload(r) for r in requests],
                    "expired_suggestions": sorted(s.id for s in expired),
                },
            )
            suggestions = self._suggest(batch_id, requests)
            for s in suggestions:
                self.suggestions[s.id] = s
                self._append(
                    "suggested",
                    {
                        "suggestion_id": s.id,
                        "request": _request_payload(s.request),
                        "row": s.row,
                        "groups": s.group_counts,
                        "reject_reason": s.reject_reason,
                    },
                )
            return suggestions

    def _suggest(self, batch_id: str, requests: list[DemandRequest]) -> list[Suggestion]:
        k = moving_horizon_length(self.state, self.config.demand, self.config.default_horizon)
        k = min(k, self.config.max_horizon)
        futures = []
        for _ in range(self.config.sample_paths):
            path = [
                tuple(
                    DemandRequest(
                        f"f{uuid.uuid4().hex[:8]}",
                        *_sample_tail(self.config.demand, self.rng),
                    )
                    for _ in range(self.config.demand.batch_size)
                )
                for _ in range(k)
            ]
            futures.append(path)
        objective = PlacementObjectiveConfig(
            secondary=self.config.secondary,
            prioritize_current=True,
        )
        model, decode = build_placement_ip(self.state, tuple(requests), futures, objective)
        outcome = solve(
            model,
            SolveLimits(
                time_limit=self.config.time_limit, relative_gap=self.config.relative_gap
            ),
        )
        out: list[Suggestion] = []
        if not outcome.status.has_incumbent:
            for req in requests:
                out.append(
                    Suggestion(
                        id=f"{batch_id}/{req.id}",
                        request=req,
                        row=None,
                        group_counts=None,
                        reject_reason="no incumbent within the time limit; retry",
                    )
                )
            return out
        decisions = decode(outcome)
        for req, dec in zip(requests, decisions):
            if dec.accepted:
                out.append(
                    Suggestion(
                        id=f"{batch_id}/{req.id}",
                        request=req,
                        row=dec.row,
                        group_counts=dec.group_counts,
                        reject_reason=None,
                    )
                )
            else:
                out.append(
                    Suggestion(
                        id=f"{batch_id}/{req.id}",
                        request=req,
                        row=None,
                        group_counts=None,
                        reject_reason=self._explain_rejection(req),
                    )
                )
        return out

    def _explain_rejection(self, req: DemandRequest) -> str:
        if can_place(self.state, req):
            return "deferred: placing it now would strand capacity for sampled demand"
        rows = self.topology.row_ids
        kinds: set[str] = set()
        for row_id in rows:
            counts = self._greedy_counts(req, row_id)
            if counts is None:
                kinds.add("space")
                continue
            for v in self.state.check_placement(req, row_id, counts):
                kinds.add(v.split(":", 1)[0])
        return "infeasible everywhere: " + ", ".join(sorted(kinds))

    def _greedy_counts(self, req: DemandRequest, row_id: str) -> dict[str, int] | None:
        counts: dict[str, int] = {}
        remaining = req.racks
        for g in self.topology.groups_in_row(row_id):
            take = min(remaining, self.state.free_tiles_in_group(g.id))
            if take > 0:
                counts[g.id] = take
                remaining -= take
        return None if remaining > 0 else counts

    def decide(
        self,
        suggestion_id: str,
        verdict: str,
        reason: str | None = None,
        reason_text: str | None = None,
        placement: dict | None = None,
    ) -> dict:
        with self.lock:
            if self.status != "open":
                raise ConflictError("session is closed")
            sug = self.suggestions.get(suggestion_id)
            if sug is None:
                raise ValidationFailure([f"unknown suggestion {suggestion_id}"])
            if sug.status != "pending":
                raise ConflictError(f"suggestion {suggestion_id} is {sug.status}")

            if verdict == "accept":
                if sug.row is None:
                    raise ValidationFailure(["cannot accept: the engine proposed a rejection"])
                violations = self.state.check_placement(sug.request, sug.row, sug.group_counts)
                if violations:
                    raise ValidationFailure(violations)
                self.state.place(sug.request, sug.row, sug.group_counts)
                sug.status = "accepted"
                self._append(
                    "accepted",
                    {
                        "suggestion_id": sug.id,
                        "request": _request_payload(sug.request),
                        "row": sug.row,
                        "groups": sug.group_counts,
                        "stranding": power_stranding(self.state),
                    },
                )
            elif verdict == "reject":
                if reason not in REJECTION_REASONS:
                    raise ValidationFailure(
                        [f"reason must be one of {REJECTION_REASONS}, got {reason!r}"]
                    )
                sug.status = "rejected"
                payload = {
                    "suggestion_id": sug.id,
                    "request": _request_payload(sug.request),
                    "reason": reason,
                }
                if reason == "other" and reason_text:
                    payload["reason_text"] = reason_text
                self._append("rejected", payload)
            elif verdict == "manual":
                if not placement or "row" not in placement or "groups" not in placement:
                    raise ValidationFailure(["manual verdict needs {row, groups}"])
                groups = {g: int(c) for g, c in placement["groups"].items()}
                violations = self.state.check_placement(sug.request, placement["row"], groups)
                if violations:
                    raise ValidationFailure(violations)
                self.state.place(sug.request, placement["row"], groups)
                sug.status = "manual"
                self._append(
                    "manual_placed",
                    {
                        "suggestion_id": sug.id,
                        "request": _request_payload(sug.request),
                        "row": placement["row"],
                        "groups": groups,
                        "stranding": power_stranding(self.state),
                    },
                )
            else:
                raise ValidationFailure([f"unknown verdict {verdict!r}"])
            return self.state_snapshot()

    def close(self) -> None:
        with self.lock:
            if self.status == "open":
                self.status = "closed"
                self._append("session_closed", {})

    # --- views ----------------------------------------------------------------
    def state_snapshot(self) -> dict:
        topo = self.topology
        rows = []
        for row_id in topo.row_ids:
            row = topo.rows[row_id]
            rows.append(
                {
                    "id": row_id,
                    "room": row.room,
                    "tiles": row.tiles,
                    "cooling_zone": row.cooling_zone,
                    "occupied": row.tiles - self.state.free_tiles_in_row(row_id),
                    "groups": {
                        g.id: {
                            "size": g.size,
                            "used": self.state.tiles_used[g.id],
                            "psus": list(g.psus),
                        }
                        for g in topo.groups_in_row(row_id)
                    },
                }
            )
        return {
            "schema": "session-state/1",
            "session": self.id,
            "version": self.version,
            "status": self.status,
            "rows": rows,
            "placements": [
                {
                    "request": _request_payload(p.request),
                    "row": p.row,
                    "groups": p.group_counts,
                }
                for p in self.state.placements
            ],
            "pending_suggestions": [
                self.suggestion_payload(s)
                for s in sorted(self.suggestions.values(), key=lambda x: x.id)
                if s.status == "pending"
            ],
        }

    @staticmethod
    def suggestion_payload(s: Suggestion) -> dict:
        return {
            "id": s.id,
            "request": _request_payload(s.request),
            "row": s.row,
            "groups": s.group_counts,
            "reject_reason": s.reject_reason,
            "status": s.status,
        }

    def metrics(self) -> dict:
        accepted = sum(1 for e in self.log if e.kind == "accepted")
        manual = sum(1 for e in self.log if e.kind == "manual_placed")
        rejected: dict[str, int] = {}
        for e in self.log:
            if e.kind == "rejected":
                r = e.payload["reason"]
                rejected[r] = rejected.get(r, 0) + 1
        placements = accepted + manual
        total_power = sum(
            d.regular for d in self.topology.devices.values() if d.level == "ups"
        )
        used_power = sum(
            p.request.power * sum(p.group_counts.values()) for p in self.state.placements
        )
        return {
            "schema": "session-metrics/1",
            "session": self.id,
            "adoption_rate": (accepted / placements) if placements else None,
            "stranding": power_stranding(self.state),
            "utilization": {
                "power": used_power / total_power if total_power else 0.0,
                "tiles": sum(self.state.tiles_used.values()) / self.topology.total_tiles(),
            },
            "room_fullness": {
                m: self.state.room_fullness(m) for m in self.topology.rooms
            },
            "decisions": {
                "accepted": accepted,
                "manual": manual,
                "rejected_by_reason": dict(sorted(rejected.items())),
                "rejected_total": sum(rejected.values()),
            },
        }


def _sample_tail(demand: DemandConfig, rng: np.random.Generator) -> tuple[int, float, float, float]:
    racks = int(rng.choice(demand.rack_counts, p=demand.rack_probs))
    power = float(demand.power.sample(rng, 1)[0])
    cooling = float(demand.cooling.sample(rng, 1)[0])
    return racks, power, cooling, demand.reward


def replay(
    topology: DataCenterTopology, log: EventLog
) -> tuple[PlacementState, dict[str, Suggestion], str, int]:
    """Rebuilds (state, suggestions, status, batch counter) from scratch."""
    state = PlacementState(topology)
    suggestions: dict[str, Suggestion] = {}
    status = "open"
    batches = 0
    for ev in log:
        if ev.kind == "batch_arrived":
            batches += 1
            for sid in ev.payload.get("expired_suggestions", []):
                if sid in suggestions and suggestions[sid].status == "pending":
                    suggestions[sid].status = "expired"
        elif ev.kind == "suggested":
            p = ev.payload
            suggestions[p["suggestion_id"]] = Suggestion(
                id=p["suggestion_id"],
                request=_request_from_payload(p["request"]),
                row=p["row"],
                group_counts=p["groups"],
                reject_reason=p.get("reject_reason"),
            )
        elif ev.kind == "accepted":
            p = ev.payload
            state.place(_request_from_payload(p["request"]), p["row"], p["groups"])
            suggestions[p["suggestion_id"]].status = "accepted"
        elif ev.kind == "manual_placed":
            p = ev.payload
            state.place(_request_from_payload(p["request"]), p["row"], p["groups"])
            suggestions[p["suggestion_id"]].status = "manual"
        elif ev.kind == "rejected":
            p = ev.payload
            suggestions[p["suggestion_id"]].status = "rejected"
        elif ev.kind == "session_closed":
            status = "closed"
    return state, suggestions, status, batches


class SessionStore:
    """All live sessions plus idempotent creation."""

    def __init__(self, persist_dir=None):
        self.persist_dir = persist_dir
        self.sessions: dict[str, PlacementSession] = {}
        self.idempotency: dict[str, str] = {}
        self.lock = threading.Lock()

    def create(
        self,
        topology: DataCenterTopology,
        config: SessionConfig,
        idempotency_key: str | None = None,
    ) -> PlacementSession:
        with self.lock:
            if idempotency_key and idempotency_key in self.idempotency:
                return self.sessions[self.idempotency[idempotency_key]]
            sid = f"sess-{uuid.uuid4().hex[:12]}"
            path = None
            if self.persist_dir is not None:
                from pathlib import Path

                Path(self.persist_dir).mkdir(parents=True, exist_ok=True)
                path = Path(self.persist_dir) / f"{sid}.events.jsonl"
            session = PlacementSession(sid, topology, config, EventLog(path))
            self.sessions[sid] = session
            if idempotency_key:
                self.idempotency[idempotency_key] = sid
            return session

    def get(self, session_id: str) -> PlacementSession:
        if session_id not in self.sessions:
            raise KeyError(session_id)
        return self.sessions[session_id]
