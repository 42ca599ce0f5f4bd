/** Decision form: accept / reject-with-reason / manual placement.
 *
 * Client-side invariants mirror the server's: a rejection must carry a
 * reason from the server-provided taxonomy, and a manual placement must
 * select exactly the request's rack count on a single row. Validation
 * failures block submission before any network call.
 */

import type { DecisionRequest, PlacementClient } from "./api.js";
import type { StateSnapshot, SuggestionPayload, Verdict } from "./types.js";
import type { Selection } from "./floorplan.js";

export interface DecisionForm {
  suggestion: SuggestionPayload;
  verdict: Verdict | null;
  reason: string | null;
  reasonText: string;
  selection: Selection | null; // manual placements only
}

export function emptyForm(suggestion: SuggestionPayload): DecisionForm {
  return { suggestion, verdict: null, reason: null, reasonText: "", selection: null };
}

export function validateForm(form: DecisionForm, reasons: string[]): string[] {
  const errors: string[] = [];
  if (form.verdict === null) {
    errors.push("choose a verdict");
    return errors;
  }
  if (form.verdict === "accept") {
    if (form.suggestion.row === null) {
      errors.push("the engine proposed a rejection; accept is unavailable");
    }
    return errors;
  }
  if (form.verdict === "reject") {
    if (!form.reason) {
      errors.push("a rejection requires a reason");
    } else if (!reasons.includes(form.reason)) {
      errors.push(`unknown reason ${form.reason}`);
    }
    if (form.reason === "other" && !form.reasonText.trim()) {
      errors.push("reason 'other' needs free text");
    }
    return errors;
  }
  // manual placement
  const sel = form.selection;
  if (!sel) {
    errors.push("manual placement needs a tile selection");
    return errors;
  }
  const rows = new Set<string>([sel.row]);
  let total = 0;
  for (const count of Object.values(sel.groups)) {
    if (count < 0) errors.push("negative tile count in selection");
    total += count;
  }
  if (rows.size !== 1) {
    errors.push("all racks of a request must land on one row");
  }
  if (total !== form.suggestion.request.racks) {
    errors.push(
      `selection must cover exactly ${form.suggestion.request.racks} tiles, got ${total}`,
    );
  }
  return errors;
}

/** Adds one tile of a group to the manual selection; rejects row mixing. */
export function toggleTile(
  form: DecisionForm,
  row: string,
  group: string,
  delta: 1 | -1,
): DecisionForm {
  const sel = form.selection ?? { row, groups: {} };
  if (sel.row !== row) {
    // same-row rule: switching rows resets the selection
    return { ...form, selection: { row, groups: { [group]: 1 } } };
  }
  const groups = { ...sel.groups };
  groups[group] = Math.max(0, (groups[group] ?? 0) + delta);
  if (groups[group] === 0) delete groups[group];
  return { ...form, selection: { row: sel.row, groups } };
}

export interface SubmitResult {
  ok: boolean;
  errors: string[];
  conflict: boolean;
  state: StateSnapshot | null;
}

export async function submitDecision(
  client: PlacementClient,
  sessionId: string,
  form: DecisionForm,
  reasons: string[],
): Promise<SubmitResult> {
  const errors = validateForm(form, reasons);
  if (errors.length) {
    return { ok: false, errors, conflict: false, state: null };
  }
  const req: DecisionRequest = {
    suggestion_id: form.suggestion.id,
    verdict: form.verdict as Verdict,
  };
  if (form.verdict === "reject") {
    req.reason = form.reason!;
    if (form.reason === "other") req.reason_text = form.reasonText;
  }
  if (form.verdict === "manual") {
    req.placement = { row: form.selection!.row, groups: form.selection!.groups };
  }
  try {
    const state = await client.decide(sessionId, req);
    return { ok: true, errors: [], conflict: false, state };
  } catch (err: any) {
    // stale suggestion: surface the refresh flow; validation errors arrive verbatim
    const conflict = err?.status === 409;
    return { ok: false, errors: [String(err?.detail ?? err)], conflict, state: null };
  }
}
