import type { PipelineEvent, Snapshot } from "./protocol.js";
import type { UiState } from "./state.js";
import { EVENT_LOG_CAP } from "./state.js";
import { quadMapper } from "./quadmap.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ViewRefs {
  banner: HTMLElement;
  retryButton: HTMLElement;
  modeBadge: HTMLElement;
  palettePane: HTMLElement;
  stage: SVGSVGElement;
  quadShape: SVGPolygonElement;
  overlayGroup: SVGGElement;
  markerDot: SVGCircleElement;
  eventLog: HTMLElement;
}

/** Build the static page skeleton once and hand back the live nodes. */
export function buildView(root: HTMLElement, frameW = 640, frameH = 480): ViewRefs {
  root.innerHTML = `
    <div class="banner" hidden>
      <span class="banner-text"></span>
      <button class="retry">retry</button>
    </div>
    <header class="top-bar">
      <span class="mode-badge" data-mode="edit">EDIT</span>
    </header>
    <main class="workbench">
      <aside class="palette-pane"></aside>
      <div class="stage-wrap"></div>
      <aside class="event-log"></aside>
    </main>
  `;
  const doc = root.ownerDocument;
  const stage = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  stage.setAttribute("class", "stage");
  stage.setAttribute("viewBox", `0 0 ${frameW} ${frameH}`);
  const backdrop = doc.createElementNS(SVG_NS, "rect");
  backdrop.setAttribute("class", "camera-field");
  backdrop.setAttribute("width", String(frameW));
  backdrop.setAttribute("height", String(frameH));
  const quadShape = doc.createElementNS(SVG_NS, "polygon") as SVGPolygonElement;
  quadShape.setAttribute("class", "quad");
  const overlayGroup = doc.createElementNS(SVG_NS, "g") as SVGGElement;
  overlayGroup.setAttribute("class", "overlay");
  const markerDot = doc.createElementNS(SVG_NS, "circle") as SVGCircleElement;
  markerDot.setAttribute("class", "marker");
  markerDot.setAttribute("r", "8");
  stage.append(backdrop, quadShape, overlayGroup, markerDot);
  const get = (sel: string) => root.querySelector(sel) as HTMLElement;
  get(".stage-wrap").appendChild(stage);
  return {
    banner: get(".banner"),
    retryButton: get(".retry"),
    modeBadge: get(".mode-badge"),
    palettePane: get(".palette-pane"),
    stage,
    quadShape,
    overlayGroup,
    markerDot,
    eventLog: get(".event-log"),
  };
}

function renderPalette(pane: HTMLElement, snapshot: Snapshot): void {
  const doc = pane.ownerDocument;
  pane.textContent = "";
  for (const slot of snapshot.palette) {
    const el = doc.createElement("div");
    el.className = "palette-slot";
    el.dataset.slotId = slot.id;
    el.textContent = slot.label || slot.kind;
    pane.appendChild(el);
  }
}

function renderOverlay(refs: ViewRefs, snapshot: Snapshot): void {
  const doc = refs.stage.ownerDocument;
  refs.overlayGroup.textContent = "";
  if (snapshot.quad) {
    refs.quadShape.setAttribute(
      "points",
      snapshot.quad.map(([x, y]) => `${x},${y}`).join(" "),
    );
    refs.quadShape.removeAttribute("hidden");
  } else {
    refs.quadShape.setAttribute("hidden", "");
  }
  const selected = new Set(snapshot.selection ?? []);
  if (snapshot.quad) {
    const map = quadMapper(snapshot.quad);
    for (const el of snapshot.layout) {
      const [x, y, w, h] = el.rect;
      const pts = [
        map(x, y),
        map(x + w, y),
        map(x + w, y + h),
        map(x, y + h),
      ];
      const glyph = doc.createElementNS(SVG_NS, "polygon");
      glyph.setAttribute(
        "class",
        selected.has(el.id) ? "element-glyph selected" : "element-glyph",
      );
      glyph.setAttribute("data-element-id", el.id);
      glyph.setAttribute("data-kind", el.kind);
      glyph.setAttribute("points", pts.map(([px, py]) => `${px},${py}`).join(" "));
      refs.overlayGroup.appendChild(glyph);
    }
  }
  if (snapshot.marker) {
    refs.markerDot.setAttribute("cx", String(snapshot.marker[0]));
    refs.markerDot.setAttribute("cy", String(snapshot.marker[1]));
    refs.markerDot.removeAttribute("hidden");
  } else {
    refs.markerDot.setAttribute("hidden", "");
  }
}

function eventLabel(ev: PipelineEvent): string {
  const base = `${ev.t.toFixed(0)}ms ${ev.type}`;
  if (ev.type === "gesture") return `${base} ${ev.kind}${ev.target ? " @" + ev.target : ""}`;
  if (ev.type === "effect") return `${base} ${ev.kind ?? ""}`.trimEnd();
  return base;
}

function renderEventLog(pane: HTMLElement, events: PipelineEvent[]): void {
  const doc = pane.ownerDocument;
  // rows already shown never change; append the unseen tail (server
  // seq is monotone) and trim old rows from the top
  const lastShown = Number(pane.dataset.lastSeq ?? "-1");
  for (const ev of events) {
    if (ev.seq <= lastShown) continue;
    const row = doc.createElement("div");
    row.className = `event-row event-${ev.type}`;
    row.textContent = eventLabel(ev);
    pane.appendChild(row);
    pane.dataset.lastSeq = String(ev.seq);
  }
  while (pane.childElementCount > EVENT_LOG_CAP) {
    pane.removeChild(pane.firstChild as Node);
  }
  pane.scrollTop = pane.scrollHeight;
}

export function render(refs: ViewRefs, state: UiState): void {
  if (state.errorMessage) {
    refs.banner.removeAttribute("hidden");
    (refs.banner.querySelector(".banner-text") as HTMLElement).textContent =
      state.errorMessage;
  } else {
    refs.banner.setAttribute("hidden", "");
  }
  if (state.snapshot) {
    const mode = state.snapshot.mode;
    refs.modeBadge.textContent = mode.toUpperCase();
    refs.modeBadge.dataset.mode = mode;
    renderPalette(refs.palettePane, state.snapshot);
    renderOverlay(refs, state.snapshot);
  }
  renderEventLog(refs.eventLog, state.eventLog);
}
