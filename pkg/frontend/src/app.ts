import { SessionConnection } from "./connection.js";
import type { Clock, SocketFactory } from "./connection.js";
import type { ServerDoc } from "./protocol.js";
import { applyDoc, applyStatus, initialUiState } from "./state.js";
import type { UiState } from "./state.js";
import { buildView, render } from "./view.js";
import type { ViewRefs } from "./view.js";
import { PointerDriver } from "./pointer.js";
import type { RectProvider } from "./pointer.js";

export interface AppOptions {
  socketFactory: SocketFactory;
  clock?: Clock;
  rectProvider?: RectProvider;
  frameW?: number;
  frameH?: number;
}

/** The workbench. One rendering loop: network documents land in a
 * queue, `tick` drains them in arrival order into the pure state and
 * renders once. Nothing outside `tick` touches the DOM. */
export class WorkbenchApp {
  state: UiState = initialUiState();
  readonly refs: ViewRefs;
  readonly conn: SessionConnection;
  readonly pointer: PointerDriver;

  private queue: ServerDoc[] = [];
  private dirty = true;
  private url = "";

  constructor(root: HTMLElement, opts: AppOptions) {
    const frameW = opts.frameW ?? 640;
    const frameH = opts.frameH ?? 480;
    this.refs = buildView(root, frameW, frameH);
    this.conn = new SessionConnection(opts.socketFactory, opts.clock);
    this.conn.onDoc = (doc) => {
      this.queue.push(doc);
    };
    this.conn.onStatus = (status) => {
      this.state = applyStatus(this.state, status);
      this.dirty = true;
    };
    const getRect =
      opts.rectProvider ?? (() => this.refs.stage.getBoundingClientRect());
    this.pointer = new PointerDriver(this.conn, getRect, frameW, frameH);
    this.pointer.attach(this.refs.stage);
    this.refs.retryButton.addEventListener("click", () => {
      if (this.url) this.connect(this.url);
    });
  }

  connect(url: string): void {
    this.url = url;
    this.conn.connect(url);
  }

  /** One pass of the rendering loop. Returns how many queued documents
   * were applied. */
  tick(): number {
    const batch = this.queue;
    if (batch.length === 0 && !this.dirty) return 0;
    this.queue = [];
    for (const doc of batch) {
      this.state = applyDoc(this.state, doc);
    }
    render(this.refs, this.state);
    this.dirty = false;
    return batch.length;
  }

  /** Drive `tick` off the browser frame clock. */
  start(raf: (cb: () => void) => void = (cb) => requestAnimationFrame(cb)): void {
    const loop = () => {
      this.tick();
      raf(loop);
    };
    raf(loop);
  }
}
