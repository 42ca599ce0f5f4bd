"""Data center topology: rooms, rows, tile groups, cooling zones, and the
three-level redundant power tree.

Every tile group draws from two leaf PSUs wired to different PDUs and
different UPSes; under a UPS failure the surviving side of each dual-homed
group carries the full rack load, bounded by failover capacities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SCHEMA = "topology/1"

UPS, PDU, PSU = "ups", "pdu", "psu"


class TopologyError(ValueError):
    """A structural invariant of the topology is violated."""


@dataclass(frozen=True)
class PowerDevice:
    id: str
    level: str  # ups | pdu | psu
    parent: str | None
    regular: float
    failover: float


@dataclass(frozen=True)
class CoolingZone:
    id: str
    capacity: float


@dataclass(frozen=True)
class Row:
    id: str
    room: str
    tiles: int
    cooling_zone: str


@dataclass(frozen=True)
class TileGroup:
    id: str
    row: str
    size: int
    psus: tuple[str, str]


class DataCenterTopology:
    def __init__(
        self,
        rooms: list[str],
        zones: list[CoolingZone],
        rows: list[Row],
        groups: list[TileGroup],
        devices: list[PowerDevice],
    ):
        self.rooms = list(rooms)
        self.zones = {z.id: z for z in zones}
        self.rows = {r.id: r for r in rows}
        self.groups = {g.id: g for g in groups}
        self.devices = {d.id: d for d in devices}
        self.group_ids = [g.id for g in groups]
        self.row_ids = [r.id for r in rows]
        self.validate()

    # --- structure helpers -------------------------------------------------
    def ups_ids(self) -> list[str]:
        return [d.id for d in self.devices.values() if d.level == UPS]

    def parent_of(self, device_id: str) -> str | None:
        return self.devices[device_id].parent

    def ancestors(self, psu_id: str) -> tuple[str, str]:
        """(pdu, ups) above a PSU."""
        pdu = self.devices[psu_id].parent
        ups = self.devices[pdu].parent
        return pdu, ups

    @cached_property
    def subtree(self) -> dict[str, set[str]]:
        """L_p for each UPS: the UPS, its PDUs, and their PSUs."""
        out: dict[str, set[str]] = {u: {u} for u in self.ups_ids()}
        for d in self.devices.values():
            if d.level == PDU:
                out[d.parent].add(d.id)
        for d in self.devices.values():
            if d.level == PSU:
                pdu = self.devices[d.parent]
                out[pdu.parent].add(d.id)
        return out

    @cached_property
    def groups_of_device(self) -> dict[str, set[str]]:
        """J_p: tile groups drawing (directly or through the tree) on device p."""
        out: dict[str, set[str]] = {d: set() for d in self.devices}
        for g in self.groups.values():
            for psu in g.psus:
                pdu, ups = self.ancestors(psu)
                out[psu].add(g.id)
                out[pdu].add(g.id)
                out[ups].add(g.id)
        return out

    @cached_property
    def device_chain_of_group(self) -> dict[str, tuple[set[str], dict[str, str]]]:
        """Per group: its six devices and the UPS serving each device."""
        out = {}
        for g in self.groups.values():
            devs: set[str] = set()
            ups_of: dict[str, str] = {}
            for psu in g.psus:
                pdu, ups = self.ancestors(psu)
                for d in (psu, pdu, ups):
                    devs.add(d)
                    ups_of[d] = ups
            out[g.id] = (devs, ups_of)
        return out

    def rows_in_room(self, room: str) -> list[Row]:
        return [r for r in self.rows.values() if r.room == room]

    def groups_in_row(self, row_id: str) -> list[TileGroup]:
        return [g for g in self.groups.values() if g.row == row_id]

    def total_tiles(self) -> int:
        return sum(r.tiles for r in self.rows.values())

    # --- validation ---------------------------------------------------------
    def validate(self) -> None:
        for d in self.devices.values():
            if d.level not in (UPS, PDU, PSU):
                raise TopologyError(f"device {d.id}: unknown level {d.level!r}")
            if d.level == UPS and d.parent is not None:
                raise TopologyError(f"UPS {d.id} must not have a parent")
            if d.level == PDU:
                if d.parent not in self.devices or self.devices[d.parent].level != UPS:
                    raise TopologyError(f"PDU {d.id} needs a UPS parent")
            if d.level == PSU:
                if d.parent not in self.devices or self.devices[d.parent].level != PDU:
                    raise TopologyError(f"PSU {d.id} needs a PDU parent")
            if not d.failover > d.regular:
                raise TopologyError(
                    f"device {d.id}: failover capacity {d.failover} must exceed "
                    f"regular capacity {d.regular}"
                )
        for r in self.rows.values():
            if r.room not in self.rooms:
                raise TopologyError(f"row {r.id} references unknown room {r.room}")
            if r.cooling_zone not in self.zones:
                raise TopologyError(f"row {r.id} references unknown zone {r.cooling_zone}")
        for g in self.groups.values():
            if g.row not in self.rows:
                raise TopologyError(f"group {g.id} references unknown row {g.row}")
            a, b = g.psus
            for psu in (a, b):
                if psu not in self.devices or self.devices[psu].level != PSU:
                    raise TopologyError(f"group {g.id} references non-PSU {psu}")
            if a == b:
                raise TopologyError(f"group {g.id} uses the same PSU twice")
            pdu_a, ups_a = self.ancestors(a)
            pdu_b, ups_b = self.ancestors(b)
            if pdu_a == pdu_b or ups_a == ups_b:
                raise TopologyError(
                    f"group {g.id}: PSU pair must have distinct PDU and UPS ancestors"
                )
        for r in self.rows.values():
            total = sum(g.size for g in self.groups_in_row(r.id))
            if total != r.tiles:
                raise TopologyError(
                    f"row {r.id}: group sizes sum to {total}, row has {r.tiles} tiles"
                )

    # --- serialization -------------------------------------------------------
    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": SCHEMA,
                "rooms": self.rooms,
                "zones": [{"id": z.id, "capacity": z.capacity} for z in self.zones.values()],
                "rows": [
                    {"id": r.id, "room": r.room, "tiles": r.tiles, "cooling_zone": r.cooling_zone}
                    for r in self.rows.values()
                ],
                "groups": [
                    {"id": g.id, "row": g.row, "size": g.size, "psus": list(g.psus)}
                    for g in self.groups.values()
                ],
                "devices": [
                    {
                        "id": d.id,
                        "level": d.level,
                        "parent": d.parent,
                        "regular": d.regular,
                        "failover": d.failover,
                    }
                    for d in self.devices.values()
                ],
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(text: str) -> "DataCenterTopology":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise TopologyError(f"unsupported schema {doc.get('schema')!r}")
        return DataCenterTopology(
            rooms=doc["rooms"],
            zones=[CoolingZone(z["id"], z["capacity"]) for z in doc["zones"]],
            rows=[Row(r["id"], r["room"], r["tiles"], r["cooling_zone"]) for r in doc["rows"]],
            groups=[
                TileGroup(g["id"], g["row"], g["size"], tuple(g["psus"])) for g in doc["groups"]
            ],
            devices=[
                PowerDevice(d["id"], d["level"], d["parent"], d["regular"], d["failover"])
                for d in doc["devices"]
            ],
        )


def gen_simulated_topology(
    ups_failover: float = 100.0,
    rooms: int = 2,
    rows_per_room: int = 36,
    tiles_per_row: int = 20,
    cooling_capacity_factor: float = 0.9,
    cooling_reference_per_tile: float = 1.0,
) -> DataCenterTopology:
    """Two identical rooms: 4 UPS each feeding 6 PDUs of 3 PSUs, 36 rows of
    20 tiles per room, each row on a PSU pair with distinct PDU and UPS
    ancestors.

    Only capacity ratios are given upstream, so the absolute scale is pinned
    by normalizing the UPS failover capacity (default 100): UPS regular is
    75% of its failover; PDU regular is 20% and PSU regular 60% of the
    parent's regular; PDU and PSU regular are 50% of their failover. One
    cooling zone per room, capacity = factor x tiles x reference.
    """
    ups_regular = 0.75 * ups_failover
    pdu_regular = 0.20 * ups_regular
    psu_regular = 0.60 * pdu_regular
    pdu_failover = pdu_regular / 0.5
    psu_failover = psu_regular / 0.5

    room_ids = [f"room{m}" for m in range(rooms)]
    zones, rows, groups, devices = [], [], [], []
    for m, room in enumerate(room_ids):
        zone_id = f"{room}/cz0"
        zones.append(
            CoolingZone(
                zone_id,
                cooling_capacity_factor * rows_per_room * tiles_per_row * cooling_reference_per_tile,
            )
        )
        n_ups = 4
        psus_by_ups: list[list[str]] = []
        for u in range(n_ups):
            ups_id = f"{room}/ups{u}"
            devices.append(PowerDevice(ups_id, UPS, None, ups_regular, ups_failover))
            psu_list = []
            for p in range(6):
                pdu_id = f"{room}/ups{u}/pdu{p}"
                devices.append(PowerDevice(pdu_id, PDU, ups_id, pdu_regular, pdu_failover))
                for s in range(3):
                    psu_id = f"{room}/ups{u}/pdu{p}/psu{s}"
                    devices.append(PowerDevice(psu_id, PSU, pdu_id, psu_regular, psu_failover))
                    psu_list.append(psu_id)
            psus_by_ups.append(psu_list)

        # cycle through all UPS pairs so every pair carries dual-homed rows
        pairs = [(a, c) for a in range(n_ups) for c in range(a + 1, n_ups)]
        cursor = [0] * n_ups
        for r in range(rows_per_room):
            u1, u2 = pairs[r % len(pairs)]
            psu_a = psus_by_ups[u1][cursor[u1]]
            cursor[u1] += 1
            psu_b = psus_by_ups[u2][cursor[u2]]
            cursor[u2] += 1
            row_id = f"{room}/row{r}"
            rows.append(Row(row_id, room, tiles_per_row, zone_id))
            groups.append(TileGroup(f"{row_id}/g0", row_id, tiles_per_row, (psu_a, psu_b)))

    return DataCenterTopology(room_ids, zones, rows, groups, devices)
