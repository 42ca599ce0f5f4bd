/** Floorplan view model: rooms, rows and tiles with placement state.
 *
 * Pure: the view derives entirely from the latest server snapshot plus
 * client-side selection. Tile detail is rendered for the focused room;
 * other rooms reduce to aggregate fullness. Legend: occupied tiles fill
 * from the front of each tile group, a pending suggestion highlights the
 * next free tiles of its groups, and the manual selection marks tiles
 * chosen in the form.
 */

import type { StateSnapshot, SuggestionPayload } from "./types.js";

export type TileState = "empty" | "occupied" | "suggested" | "selected";

export interface TileView {
  row: string;
  group: string;
  index: number; // position within the row
  state: TileState;
  ups: string[]; // UPS ancestors serving the tile's group (overlay coloring)
  coolingZone: string;
}

export interface RowView {
  id: string;
  room: string;
  tiles: TileView[];
  occupied: number;
  capacity: number;
}

export interface RoomAggregate {
  room: string;
  totalTiles: number;
  occupiedTiles: number;
  fullness: number;
}

export interface FloorplanView {
  version: number;
  focusedRoom: string;
  rows: RowView[]; // rows of the focused room only
  rooms: RoomAggregate[]; // aggregates for every room
  suggestionTiles: number; // highlighted tiles across the focused room
  overlay: OverlayMode;
}

export type OverlayMode = "none" | "ups" | "cooling";

export interface Selection {
  row: string;
  groups: Record<string, number>;
}

function upsOf(psus: string[]): string[] {
  // PSU ids are path-like: <room>/ups<k>/pdu<j>/psu<i>
  return psus.map((p) => p.split("/").slice(0, 2).join("/"));
}

export function renderSession(
  snapshot: StateSnapshot,
  pending: SuggestionPayload[],
  options: {
    focusedRoom?: string;
    selection?: Selection | null;
    overlay?: OverlayMode;
  } = {},
): FloorplanView {
  if (!snapshot.schema.startsWith("session-state/")) {
    throw new Error(`unsupported snapshot schema: ${snapshot.schema}`);
  }
  const rooms = new Map<string, RoomAggregate>();
  for (const row of snapshot.rows) {
    const agg = rooms.get(row.room) ?? {
      room: row.room,
      totalTiles: 0,
      occupiedTiles: 0,
      fullness: 0,
    };
    agg.totalTiles += row.tiles;
    agg.occupiedTiles += row.occupied;
    rooms.set(row.room, agg);
  }
  for (const agg of rooms.values()) {
    agg.fullness = agg.totalTiles ? agg.occupiedTiles / agg.totalTiles : 0;
  }
  const focusedRoom = options.focusedRoom ?? snapshot.rows[0]?.room ?? "";
  const selection = options.selection ?? null;

  // suggested tiles per group: pending suggestions claim the next free tiles
  const suggestedPerGroup = new Map<string, number>();
  for (const sug of pending) {
    if (sug.status !== "pending" || sug.row === null || sug.groups === null) continue;
    for (const [g, count] of Object.entries(sug.groups)) {
      suggestedPerGroup.set(g, (suggestedPerGroup.get(g) ?? 0) + count);
    }
  }

  const rows: RowView[] = [];
  let suggestionTiles = 0;
  for (const row of snapshot.rows) {
    if (row.room !== focusedRoom) continue;
    const tiles: TileView[] = [];
    let index = 0;
    for (const [gid, g] of Object.entries(row.groups)) {
      const suggested = suggestedPerGroup.get(gid) ?? 0;
      const selected = selection && selection.row === row.id ? (selection.groups[gid] ?? 0) : 0;
      for (let i = 0; i < g.size; i++) {
        let state: TileState = "empty";
        if (i < g.used) state = "occupied";
        else if (i < g.used + suggested) state = "suggested";
        else if (i < g.used + suggested + selected) state = "selected";
        if (state === "suggested") suggestionTiles += 1;
        tiles.push({
          row: row.id,
          group: gid,
          index: index++,
          state,
          ups: upsOf(g.psus),
          coolingZone: row.cooling_zone,
        });
      }
    }
    rows.push({
      id: row.id,
      room: row.room,
      tiles,
      occupied: row.occupied,
      capacity: row.tiles,
    });
  }
  return {
    version: snapshot.version,
    focusedRoom,
    rows,
    rooms: [...rooms.values()].sort((a, b) => a.room.localeCompare(b.room)),
    suggestionTiles,
    overlay: options.overlay ?? "none",
  };
}

/** Occupied-tile count visible in a view (focused room only). */
export function occupiedTiles(view: FloorplanView): number {
  let n = 0;
  for (const row of view.rows) {
    for (const t of row.tiles) if (t.state === "occupied") n += 1;
  }
  return n;
}

/** Overlay color keys per tile, pure recoloring without state change. */
export function overlayKeys(view: FloorplanView): Map<string, string> {
  const keys = new Map<string, string>();
  for (const row of view.rows) {
    for (const t of row.tiles) {
      const id = `${t.row}:${t.index}`;
      if (view.overlay === "ups") keys.set(id, t.ups.join("+"));
      else if (view.overlay === "cooling") keys.set(id, t.coolingZone);
      else keys.set(id, "");
    }
  }
  return keys;
}
