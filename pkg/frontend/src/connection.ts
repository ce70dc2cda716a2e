import type { ClientMessage, ServerDoc } from "./protocol.js";
import { parseServerDoc } from "./protocol.js";

// Minimal shape shared by browser WebSocket and test doubles.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: string }) => void) | null;
  onerror: (() => void) | null;
  onclose: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;
export type Clock = () => number;

export type ConnectionStatus = "idle" | "connecting" | "open" | "error" | "closed";

const MOVE_INTERVAL_MS = 1000 / 60;

/** Outbound half of the session protocol.
 *
 * Every message is stamped with the client clock and a strictly
 * increasing sequence number. Marker moves are throttled so a drag can
 * never emit more than 60 messages per second; the newest dropped
 * position is kept and can be flushed at gesture boundaries. */
export class SessionConnection {
  status: ConnectionStatus = "idle";
  onDoc: ((doc: ServerDoc) => void) | null = null;
  onStatus: ((status: ConnectionStatus) => void) | null = null;

  private socket: SocketLike | null = null;
  private seq = 0;
  private lastMoveAt = -Infinity;
  private pendingMove: { x: number; y: number } | null = null;
  private readonly makeSocket: SocketFactory;
  private readonly now: Clock;

  constructor(makeSocket: SocketFactory, clock: Clock = () => performance.now()) {
    this.makeSocket = makeSocket;
    this.now = clock;
  }

  connect(url: string): void {
    if (this.socket) this.socket.close();
    this.setStatus("connecting");
    let sock: SocketLike;
    try {
      sock = this.makeSocket(url);
    } catch {
      this.socket = null;
      this.setStatus("error");
      return;
    }
    this.socket = sock;
    sock.onopen = () => this.setStatus("open");
    sock.onerror = () => this.setStatus("error");
    sock.onclose = () => {
      if (this.status !== "error") this.setStatus("closed");
    };
    sock.onmessage = (ev) => {
      const doc = parseServerDoc(ev.data);
      if (doc && this.onDoc) this.onDoc(doc);
    };
  }

  close(): void {
    if (this.socket) this.socket.close();
    this.socket = null;
  }

  /** Pointer motion. Returns true when a message actually went out. */
  markerMove(x: number, y: number): boolean {
    const t = this.now();
    if (t - this.lastMoveAt < MOVE_INTERVAL_MS) {
      this.pendingMove = { x, y };
      return false;
    }
    this.lastMoveAt = t;
    this.pendingMove = null;
    this.send({ type: "marker_move", x, y });
    return true;
  }

  /** Send the newest throttled-away position, still at most 60 Hz. */
  flushMove(): boolean {
    if (!this.pendingMove) return false;
    const { x, y } = this.pendingMove;
    return this.markerMove(x, y);
  }

  /** Tap onset; presses map here, releases never do. */
  tap(): void {
    this.send({ type: "tap" });
  }

  setPose(corners: number[]): void {
    this.send({ type: "pose_set", corners });
  }

  configure(audioThreshold: number): void {
    this.send({ type: "config", audio_threshold: audioThreshold });
  }

  send(msg: ClientMessage): void {
    if (!this.socket || this.status !== "open") return;
    const doc = { ...msg, t: this.now(), seq: this.seq };
    this.seq += 1;
    this.socket.send(JSON.stringify(doc));
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    if (this.onStatus) this.onStatus(status);
  }
}
