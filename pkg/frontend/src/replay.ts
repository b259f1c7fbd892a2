/**
 * Session replay: rebuild the view from the service's append-only review log.
 *
 * Every event the controller posts carries a full view snapshot, so replay is
 * a deterministic left fold over the log — the state after replaying a
 * session equals the live state at the moment the last event was logged.
 */

import type { Axis, LayerToggles, ViewState } from "./state.js";

export interface LoggedEvent {
  session_id: string;
  event_kind: "budget_set" | "slice_viewed" | "region_marked";
  view: {
    case_id: string;
    method_id: string;
    axis: Axis;
    slice_index: number;
    budget_percent: number;
    layers: LayerToggles;
    comparison_method: string | null;
  };
  [key: string]: unknown;
}

export function stateFromSnapshot(view: LoggedEvent["view"]): ViewState {
  return {
    caseId: view.case_id,
    methodId: view.method_id,
    axis: view.axis,
    sliceIndex: view.slice_index,
    budgetPercent: view.budget_percent,
    layers: { ...view.layers },
    comparisonMethod: view.comparison_method,
  };
}

/** Parse one case's review log (JSONL, one event per line). */
export function parseReviewLog(jsonl: string): LoggedEvent[] {
  return jsonl
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => JSON.parse(line) as LoggedEvent);
}

/**
 * Replay a session's events in log order and return every intermediate view
 * state. The last element is the session's final ViewState.
 */
export function replaySession(events: LoggedEvent[], sessionId: string): ViewState[] {
  return events
    .filter((e) => e.session_id === sessionId)
    .map((e) => stateFromSnapshot(e.view));
}

export function finalState(events: LoggedEvent[], sessionId: string): ViewState | null {
  const states = replaySession(events, sessionId);
  return states.length > 0 ? (states[states.length - 1] ?? null) : null;
}
