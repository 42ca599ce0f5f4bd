/** Live dashboards reduced from the session event stream.
 *
 * Every displayed number is recomputable from /events (and cross-checked
 * against /metrics in tests): adoption over time, the stranding series,
 * per-room placement counts, and the rejection-reason histogram.
 */

import type { SessionEvent } from "./types.js";

export interface DashboardState {
  eventsSeen: number;
  accepted: number;
  manual: number;
  rejectedByReason: Record<string, number>;
  adoptionSeries: { seq: number; adoption: number }[];
  strandingSeries: { seq: number; stranding: number }[];
  placementsByRoom: Record<string, number>;
}

export function emptyDashboard(): DashboardState {
  return {
    eventsSeen: 0,
    accepted: 0,
    manual: 0,
    rejectedByReason: {},
    adoptionSeries: [],
    strandingSeries: [],
    placementsByRoom: {},
  };
}

export function applyEvent(state: DashboardState, event: SessionEvent): DashboardState {
  const next: DashboardState = {
    ...state,
    rejectedByReason: { ...state.rejectedByReason },
    adoptionSeries: [...state.adoptionSeries],
    strandingSeries: [...state.strandingSeries],
    placementsByRoom: { ...state.placementsByRoom },
    eventsSeen: state.eventsSeen + 1,
  };
  const payload = event.payload as any;
  if (event.kind === "accepted" || event.kind === "manual_placed") {
    if (event.kind === "accepted") next.accepted += 1;
    else next.manual += 1;
    const placements = next.accepted + next.manual;
    next.adoptionSeries.push({ seq: event.seq, adoption: next.accepted / placements });
    if (typeof payload.stranding === "number") {
      next.strandingSeries.push({ seq: event.seq, stranding: payload.stranding });
    }
    const row: string | undefined = payload.row;
    if (row) {
      const room = row.split("/")[0];
      next.placementsByRoom[room] = (next.placementsByRoom[room] ?? 0) + 1;
    }
  } else if (event.kind === "rejected") {
    const reason = String(payload.reason ?? "other");
    next.rejectedByReason[reason] = (next.rejectedByReason[reason] ?? 0) + 1;
  }
  return next;
}

export function reduceEvents(events: SessionEvent[]): DashboardState {
  let state = emptyDashboard();
  for (const e of events) state = applyEvent(state, e);
  return state;
}

export function adoptionRate(state: DashboardState): number | null {
  const placements = state.accepted + state.manual;
  return placements ? state.accepted / placements : null;
}

export function rejectionHistogram(state: DashboardState): Record<string, number> {
  return { ...state.rejectedByReason };
}

export function totalRejections(state: DashboardState): number {
  return Object.values(state.rejectedByReason).reduce((a, b) => a + b, 0);
}
