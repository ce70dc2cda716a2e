import type { SessionConnection } from "./connection.js";

export interface StageRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

export type RectProvider = () => StageRect;

/** Maps pointer events on the stage to world-control messages.
 *
 * Moves ride the connection's 60 Hz throttle. A press is a tap onset
 * and nothing more; releases only flush the last throttled move so the
 * marker does not stop short of the pointer. */
export class PointerDriver {
  down = false;

  private readonly conn: SessionConnection;
  private readonly getRect: RectProvider;
  private readonly frameW: number;
  private readonly frameH: number;

  constructor(
    conn: SessionConnection,
    getRect: RectProvider,
    frameW = 640,
    frameH = 480,
  ) {
    this.conn = conn;
    this.getRect = getRect;
    this.frameW = frameW;
    this.frameH = frameH;
  }

  attach(stage: { addEventListener(type: string, fn: (ev: Event) => void): void }): void {
    stage.addEventListener("pointermove", (ev) => this.pointerMove(ev as PointerEvent));
    stage.addEventListener("pointerdown", (ev) => this.pointerDown(ev as PointerEvent));
    stage.addEventListener("pointerup", () => this.pointerUp());
  }

  pointerMove(ev: { clientX: number; clientY: number }): void {
    const [x, y] = this.toWorld(ev.clientX, ev.clientY);
    this.conn.markerMove(x, y);
  }

  pointerDown(ev: { clientX: number; clientY: number }): void {
    this.down = true;
    const [x, y] = this.toWorld(ev.clientX, ev.clientY);
    this.conn.markerMove(x, y);
    this.conn.tap();
  }

  pointerUp(): void {
    this.down = false;
    this.conn.flushMove();
  }

  toWorld(clientX: number, clientY: number): [number, number] {
    const r = this.getRect();
    const sx = r.width > 0 ? this.frameW / r.width : 1;
    const sy = r.height > 0 ? this.frameH / r.height : 1;
    const x = Math.min(Math.max((clientX - r.left) * sx, 0), this.frameW - 1);
    const y = Math.min(Math.max((clientY - r.top) * sy, 0), this.frameH - 1);
    return [x, y];
  }
}
