import type { StateSnapshot, SuggestionPayload } from "../src/types.js";

export function snapshotFixture(): StateSnapshot {
  return {
    schema: "session-state/1",
    session: "sess-x",
    version: 7,
    status: "open",
    rows: [
      {
        id: "room0/row0",
        room: "room0",
        tiles: 4,
        cooling_zone: "room0/cz0",
        occupied: 2,
        groups: {
          "room0/row0/g0": {
            size: 4,
            used: 2,
            psus: ["room0/ups0/pdu0/psu0", "room0/ups1/pdu0/psu0"],
          },
        },
      },
      {
        id: "room0/row1",
        room: "room0",
        tiles: 4,
        cooling_zone: "room0/cz0",
        occupied: 0,
        groups: {
          "room0/row1/g0": {
            size: 4,
            used: 0,
            psus: ["room0/ups2/pdu0/psu0", "room0/ups3/pdu0/psu0"],
          },
        },
      },
      {
        id: "room1/row0",
        room: "room1",
        tiles: 4,
        cooling_zone: "room1/cz0",
        occupied: 4,
        groups: {
          "room1/row0/g0": {
            size: 4,
            used: 4,
            psus: ["room1/ups0/pdu0/psu0", "room1/ups1/pdu0/psu0"],
          },
        },
      },
    ],
    placements: [],
    pending_suggestions: [],
  };
}

export function suggestionFixture(
  overrides: Partial<SuggestionPayload> = {},
): SuggestionPayload {
  return {
    id: "b1/req0",
    request: { id: "req0", racks: 4, power: 2.0, cooling: 1.0, reward: 200 },
    row: "room0/row1",
    groups: { "room0/row1/g0": 4 },
    reject_reason: null,
    status: "pending",
    ...overrides,
  };
}
