import { WorkbenchApp } from "./app.js";
import type { SocketLike } from "./connection.js";

function browserSocket(url: string): SocketLike {
  const ws = new WebSocket(url);
  const like: SocketLike = {
    send: (d) => ws.send(d),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onerror: null,
    onclose: null,
  };
  ws.onopen = () => like.onopen?.();
  ws.onmessage = (ev) => like.onmessage?.({ data: String(ev.data) });
  ws.onerror = () => like.onerror?.();
  ws.onclose = () => like.onclose?.();
  return like;
}

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server") ?? "ws://127.0.0.1:8765";
}

const root = document.getElementById("app");
if (root) {
  const app = new WorkbenchApp(root, { socketFactory: browserSocket });
  app.connect(serverUrl());
  app.start();
}
