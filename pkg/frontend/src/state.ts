import type { PipelineEvent, ServerDoc, Snapshot } from "./protocol.js";
import type { ConnectionStatus } from "./connection.js";

export const EVENT_LOG_CAP = 200;

// Everything the screen shows. Design state (mode, layout, palette,
// selection) lives only inside the last server snapshot; the UI never
// edits it locally.
export interface UiState {
  status: ConnectionStatus;
  errorMessage: string | null;
  snapshot: Snapshot | null;
  eventLog: PipelineEvent[];
}

export function initialUiState(): UiState {
  return { status: "idle", errorMessage: null, snapshot: null, eventLog: [] };
}

const LOGGED_TYPES = new Set(["tap", "gesture", "effect"]);

export function applyDoc(state: UiState, doc: ServerDoc): UiState {
  if (doc.type === "snapshot") {
    return { ...state, snapshot: doc as Snapshot, errorMessage: null };
  }
  if (doc.type === "error") {
    return { ...state, errorMessage: doc.message };
  }
  if (LOGGED_TYPES.has(doc.type)) {
    const eventLog = [...state.eventLog, doc as PipelineEvent].slice(-EVENT_LOG_CAP);
    return { ...state, eventLog };
  }
  // move events arrive every frame the marker travels; the snapshot
  // already carries the live position, so they stay off the log
  return state;
}

export function applyStatus(state: UiState, status: ConnectionStatus): UiState {
  const errorMessage =
    status === "error" ? "connection failed" : status === "closed" ? "connection closed" : null;
  return { ...state, status, errorMessage };
}
