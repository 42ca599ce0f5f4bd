/** Wire schemas of the placement service (all versioned server-side). */

export interface RequestPayload {
  id: string;
  racks: number;
  power: number;
  cooling: number;
  reward: number;
}

export interface SuggestionPayload {
  id: string;
  request: RequestPayload;
  row: string | null;
  groups: Record<string, number> | null;
  reject_reason: string | null;
  status: "pending" | "accepted" | "rejected" | "manual" | "expired";
}

export interface GroupSnapshot {
  size: number;
  used: number;
  psus: string[];
}

export interface RowSnapshot {
  id: string;
  room: string;
  tiles: number;
  cooling_zone: string;
  occupied: number;
  groups: Record<string, GroupSnapshot>;
}

export interface StateSnapshot {
  schema: string;
  session: string;
  version: number;
  status: "open" | "closed";
  rows: RowSnapshot[];
  placements: {
    request: RequestPayload;
    row: string;
    groups: Record<string, number>;
  }[];
  pending_suggestions: SuggestionPayload[];
}

export interface SessionMetrics {
  schema: string;
  session: string;
  adoption_rate: number | null;
  stranding: number;
  utilization: { power: number; tiles: number };
  room_fullness: Record<string, number>;
  decisions: {
    accepted: number;
    manual: number;
    rejected_by_reason: Record<string, number>;
    rejected_total: number;
  };
}

export interface SessionEvent {
  seq: number;
  timestamp: number;
  kind:
    | "session_created"
    | "batch_arrived"
    | "suggested"
    | "accepted"
    | "rejected"
    | "manual_placed"
    | "rolled_back"
    | "session_closed";
  payload: Record<string, unknown>;
}

export type Verdict = "accept" | "reject" | "manual";
