// Wire types for the session protocol: newline-delimited JSON documents,
// WebSocket text frames carrying one document each. The server is the
// authority; everything here is read-only mirroring plus the four
// world-control messages a client may send.

export interface PaletteSlot {
  id: string;
  kind: string;
  label: string;
  binding: unknown;
}

export interface LayoutElement {
  id: string;
  kind: string;
  rect: [number, number, number, number];
  label: string;
  binding: unknown;
  locked: boolean;
}

export type Mode = "edit" | "run";

export interface Snapshot {
  type: "snapshot";
  t: number;
  seq: number;
  mode: Mode;
  selection: string[] | null;
  palette: PaletteSlot[];
  layout: LayoutElement[];
  quad: [number, number][] | null;
  marker: [number, number] | null;
}

export interface PipelineEvent {
  type: "move" | "tap" | "gesture" | "effect";
  t: number;
  seq: number;
  kind?: string;
  target?: string | null;
  payload?: Record<string, unknown>;
  [key: string]: unknown;
}

export interface ErrorDoc {
  type: "error";
  message: string;
  t: number;
  seq: number;
}

export type ServerDoc = Snapshot | PipelineEvent | ErrorDoc;

const EVENT_TYPES = new Set(["move", "tap", "gesture", "effect"]);

export function parseServerDoc(line: string): ServerDoc | null {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof doc !== "object" || doc === null) return null;
  const type = (doc as { type?: unknown }).type;
  if (type === "snapshot" || type === "error" || EVENT_TYPES.has(type as string)) {
    return doc as ServerDoc;
  }
  return null;
}

export interface MarkerMoveMsg {
  type: "marker_move";
  x: number;
  y: number;
}

export interface TapMsg {
  type: "tap";
}

export interface PoseSetMsg {
  type: "pose_set";
  corners: number[];
}

export interface ConfigMsg {
  type: "config";
  audio_threshold?: number;
}

export type ClientMessage = MarkerMoveMsg | TapMsg | PoseSetMsg | ConfigMsg;
