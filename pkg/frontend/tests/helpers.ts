import fs from "node:fs";
import path from "node:path";
import { fileURLToPath } from "node:url";
import { WorkbenchApp } from "../src/app.js";
import type { SocketLike } from "../src/connection.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));

export class MockSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((ev: { data: string }) => void) | null = null;
  onerror: (() => void) | null = null;
  onclose: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  open(): void {
    this.onopen?.();
  }

  push(line: string): void {
    this.onmessage?.({ data: line });
  }

  fail(): void {
    this.onerror?.();
    this.onclose?.();
  }

  sentDocs(): Array<Record<string, unknown>> {
    return this.sent.map((s) => JSON.parse(s));
  }
}

export interface Harness {
  app: WorkbenchApp;
  root: HTMLElement;
  sockets: MockSocket[];
  clock: { now: number };
}

/** App wired to mock sockets and a hand-cranked clock. */
export function makeHarness(opts: { failConnect?: boolean } = {}): Harness {
  const sockets: MockSocket[] = [];
  const clock = { now: 0 };
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new WorkbenchApp(root, {
    socketFactory: (url) => {
      if (opts.failConnect) throw new Error(`cannot reach ${url}`);
      const s = new MockSocket();
      sockets.push(s);
      return s;
    },
    clock: () => clock.now,
    rectProvider: () => ({ left: 0, top: 0, width: 640, height: 480 }),
  });
  return { app, root, sockets, clock };
}

export function recordedSession(): string[] {
  const file = path.join(HERE, "data", "recorded_session.jsonl");
  return fs
    .readFileSync(file, "utf8")
    .split("\n")
    .filter((l) => l.length > 0);
}
