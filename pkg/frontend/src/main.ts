// Page assembly and the compute loop: a 5x6 coefficient grid, presets,
// one plot, and a carousel over the real solutions of the last solve.
//
// Every number on screen is copied out of a SolveResponse; the only math
// done here is turning coefficients into screen polylines.

import { fetchInstance, latestSequence, postSolve, type SolveResponse } from "./api";
import {
  type CarouselState,
  current,
  makeCarousel,
  setFilter,
  step,
  type Filter,
} from "./carousel";
import { defaultViewport, fitViewport, renderConic, zoomViewport, type ConicShape, type Viewport } from "./conicmath";
import { parseCell } from "./parse";
import { paintScene, type Curve, type Marker } from "./render";

const ROWS = 5;
const COLS = 6;
const CELL_LABELS = ["x^2", "xy", "y^2", "x", "y", "1"];
const AUTO_ADVANCE_MS = 1500;

interface App {
  root: HTMLElement;
  cells: HTMLInputElement[][];
  compute: HTMLButtonElement;
  banner: HTMLElement;
  tallies: HTMLElement;
  errorBox: HTMLElement;
  warningsBox: HTMLElement;
  plot: SVGElement;
  carouselLabel: HTMLElement;
  detailBox: HTMLElement;
  filterSel: HTMLSelectElement;
  playBtn: HTMLButtonElement;
  tangencyToggle: HTMLInputElement;
  // state
  response: SolveResponse | null;
  carousel: CarouselState | null;
  viewport: Viewport;
  dirty: boolean;
  inFlight: Promise<void>;
  playing: boolean;
  timer: ReturnType<typeof setInterval> | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

export function init(root: HTMLElement): App {
  const doc = root.ownerDocument;
  root.classList.add("steiner-app");

  const controls = el(doc, "div", { class: "controls" });
  const presetSel = el(doc, "select", { id: "preset" });
  for (const name of ["none", "fulton", "random"]) {
    presetSel.appendChild(el(doc, "option", { value: name }, name));
  }
  controls.appendChild(el(doc, "label", {}, "preset "));
  controls.appendChild(presetSel);
  const compute = el(doc, "button", { id: "compute", disabled: "" }, "compute");
  controls.appendChild(compute);
  root.appendChild(controls);

  const grid = el(doc, "table", { class: "grid" });
  const head = el(doc, "tr");
  head.appendChild(el(doc, "th"));
  for (const lab of CELL_LABELS) head.appendChild(el(doc, "th", {}, lab));
  grid.appendChild(head);
  const cells: HTMLInputElement[][] = [];
  for (let i = 0; i < ROWS; i++) {
    const tr = el(doc, "tr");
    tr.appendChild(el(doc, "th", {}, `conic ${i + 1}`));
    const row: HTMLInputElement[] = [];
    for (let j = 0; j < COLS; j++) {
      const td = el(doc, "td");
      const input = el(doc, "input", {
        class: "cell",
        "data-row": String(i),
        "data-col": String(j),
        value: "",
      });
      td.appendChild(input);
      tr.appendChild(td);
      row.push(input);
    }
    cells.push(row);
    grid.appendChild(tr);
  }
  root.appendChild(grid);

  const banner = el(doc, "div", { id: "banner" });
  const tallies = el(doc, "div", { id: "tallies" });
  const errorBox = el(doc, "div", { id: "error", class: "error" });
  const warningsBox = el(doc, "div", { id: "warnings" });
  root.appendChild(banner);
  root.appendChild(tallies);
  root.appendChild(errorBox);
  root.appendChild(warningsBox);

  const plotWrap = el(doc, "div", { class: "plot-wrap" });
  const plot = doc.createElementNS("http://www.w3.org/2000/svg", "svg");
  plot.setAttribute("id", "plot");
  plotWrap.appendChild(plot);
  const zoomBar = el(doc, "div", { class: "zoom" });
  const zoomIn = el(doc, "button", { id: "zoom-in" }, "+");
  const zoomOut = el(doc, "button", { id: "zoom-out" }, "-");
  const zoomFit = el(doc, "button", { id: "zoom-fit" }, "fit");
  zoomBar.appendChild(zoomIn);
  zoomBar.appendChild(zoomOut);
  zoomBar.appendChild(zoomFit);
  plotWrap.appendChild(zoomBar);
  root.appendChild(plotWrap);

  const nav = el(doc, "div", { class: "carousel" });
  const prev = el(doc, "button", { id: "prev" }, "◀");
  const playBtn = el(doc, "button", { id: "play" }, "pause");
  const next = el(doc, "button", { id: "next" }, "▶");
  const filterSel = el(doc, "select", { id: "filter" });
  for (const [value, label] of [
    ["all", "all"],
    ["Ellipse", "ellipses"],
    ["Hyperbola", "hyperbolas"],
  ]) {
    filterSel.appendChild(el(doc, "option", { value }, label));
  }
  const carouselLabel = el(doc, "span", { id: "carousel-label" });
  const tangencyToggle = el(doc, "input", { id: "show-tangency", type: "checkbox" });
  nav.appendChild(prev);
  nav.appendChild(playBtn);
  nav.appendChild(next);
  nav.appendChild(filterSel);
  nav.appendChild(carouselLabel);
  const toggleLabel = el(doc, "label", {}, " tangency points ");
  toggleLabel.appendChild(tangencyToggle);
  nav.appendChild(toggleLabel);
  root.appendChild(nav);

  const detailBox = el(doc, "div", { id: "detail" });
  root.appendChild(detailBox);

  const app: App = {
    root,
    cells,
    compute,
    banner,
    tallies,
    errorBox,
    warningsBox,
    plot,
    carouselLabel,
    detailBox,
    filterSel,
    playBtn,
    tangencyToggle,
    response: null,
    carousel: null,
    viewport: defaultViewport(),
    dirty: false,
    inFlight: Promise.resolve(),
    playing: true,
    timer: null,
  };

  const onEdit = (input: HTMLInputElement) => {
    validateCellInput(input);
    app.dirty = true;
    refreshComputeEnabled(app);
  };
  for (const row of cells) {
    for (const input of row) {
      input.addEventListener("input", () => onEdit(input));
    }
  }

  presetSel.addEventListener("change", () => {
    void applyPreset(app, presetSel.value);
  });
  compute.addEventListener("click", () => {
    void runCompute(app);
  });
  prev.addEventListener("click", () => {
    pause(app);
    advance(app, -1);
  });
  next.addEventListener("click", () => {
    pause(app);
    advance(app, 1);
  });
  playBtn.addEventListener("click", () => {
    if (app.playing) pause(app);
    else resume(app);
  });
  filterSel.addEventListener("change", () => {
    if (app.response && app.carousel) {
      app.carousel = setFilter(app.carousel, app.response.solutions, filterSel.value as Filter);
      repaint(app);
    }
  });
  tangencyToggle.addEventListener("change", () => repaint(app));
  zoomIn.addEventListener("click", () => {
    app.viewport = zoomViewport(app.viewport, 1 / 1.5);
    repaint(app);
  });
  zoomOut.addEventListener("click", () => {
    app.viewport = zoomViewport(app.viewport, 1.5);
    repaint(app);
  });
  zoomFit.addEventListener("click", () => {
    app.viewport = fitViewport(inputShapes(app, defaultViewport()));
    repaint(app);
  });

  repaint(app);
  return app;
}

function validateCellInput(input: HTMLInputElement): boolean {
  const parsed = parseCell(input.value);
  input.classList.toggle("invalid", !parsed.ok);
  if (!parsed.ok) input.setAttribute("title", parsed.reason ?? "invalid");
  else input.removeAttribute("title");
  return parsed.ok;
}

function allCellsValid(app: App): boolean {
  return app.cells.every((row) => row.every((input) => parseCell(input.value).ok));
}

function refreshComputeEnabled(app: App): void {
  const enable = app.dirty && allCellsValid(app);
  if (enable) app.compute.removeAttribute("disabled");
  else app.compute.setAttribute("disabled", "");
}

async function applyPreset(app: App, name: string): Promise<void> {
  if (name === "none") {
    for (const row of app.cells) {
      for (const input of row) input.value = "";
    }
    app.dirty = false;
  } else {
    try {
      const doc = await fetchInstance(name as "fulton" | "random");
      doc.conics.forEach((row, i) => {
        row.forEach((coeff, j) => {
          app.cells[i][j].value = coeff;
        });
      });
      app.dirty = true;
    } catch (err) {
      app.errorBox.textContent = `could not load preset: ${String(err)}`;
      return;
    }
  }
  for (const row of app.cells) for (const input of row) validateCellInput(input);
  refreshComputeEnabled(app);
  app.viewport = fitViewport(inputShapes(app, defaultViewport()));
  repaint(app);
}

function runCompute(app: App): Promise<void> {
  const conics = app.cells.map((row) => row.map((input) => input.value.trim()));
  app.compute.setAttribute("disabled", "");
  app.errorBox.textContent = "";
  app.banner.textContent = "solving…";
  const done = postSolve(conics).then((outcome) => {
    if (outcome.seq !== latestSequence()) return; // superseded; drop it
    if (outcome.kind === "error") {
      app.banner.textContent = "";
      app.errorBox.textContent = outcome.body?.detail ?? `request failed (${outcome.status})`;
      const field = outcome.body?.field;
      if (field && field.length === 2) {
        const [i, j] = field;
        app.cells[i]?.[j]?.classList.add("invalid");
      }
      app.dirty = true;
      refreshComputeEnabled(app);
      return;
    }
    app.response = outcome.body;
    app.carousel = makeCarousel(outcome.body.solutions);
    app.carousel = setFilter(app.carousel, outcome.body.solutions, app.filterSel.value as Filter);
    app.dirty = false;
    refreshComputeEnabled(app);
    app.viewport = fitViewport(inputShapes(app, defaultViewport()));
    resume(app);
    repaint(app);
  });
  app.inFlight = done;
  return done;
}

function pause(app: App): void {
  app.playing = false;
  app.playBtn.textContent = "play";
  if (app.timer !== null) clearInterval(app.timer);
  app.timer = null;
}

function resume(app: App): void {
  app.playing = true;
  app.playBtn.textContent = "pause";
  if (app.timer !== null) clearInterval(app.timer);
  app.timer = setInterval(() => advance(app, 1), AUTO_ADVANCE_MS);
}

function advance(app: App, delta: number): void {
  if (!app.carousel) return;
  app.carousel = step(app.carousel, delta);
  repaint(app);
}

function inputShapes(app: App, viewport: Viewport): ConicShape[] {
  const shapes: ConicShape[] = [];
  for (const row of app.cells) {
    const parsed = row.map((input) => parseCell(input.value));
    if (parsed.some((p) => !p.ok)) continue;
    shapes.push(renderConic(parsed.map((p) => p.value), viewport));
  }
  return shapes;
}

function repaint(app: App): void {
  const curves: Curve[] = [];
  const markers: Marker[] = [];
  const v = app.viewport;

  app.cells.forEach((row, i) => {
    const parsed = row.map((input) => parseCell(input.value));
    if (parsed.some((p) => !p.ok)) return;
    curves.push({ shape: renderConic(parsed.map((p) => p.value), v), cls: "conic-input", tag: String(i) });
  });

  const resp = app.response;
  const idx = app.carousel ? current(app.carousel) : null;
  if (resp && idx !== null) {
    const sol = resp.solutions[idx];
    const coeffs = [...sol.u.map(([re]) => parseCell(re).value), 1];
    curves.push({ shape: renderConic(coeffs, v), cls: "conic-solution", tag: `sol-${idx}` });
    if (app.tangencyToggle.checked && sol.tangency_points) {
      for (const [px, py] of sol.tangency_points) {
        markers.push({ at: [parseCell(px[0]).value, parseCell(py[0]).value], cls: "tangency-point" });
      }
    }
  }
  paintScene(app.plot, { viewport: v, curves, markers });

  if (resp) {
    app.banner.textContent = `${resp.count_complex} complex / ${resp.count_real} real`;
    const parts: string[] = [];
    for (const [cls, n] of Object.entries(resp.class_counts)) parts.push(`${n} ${cls.toLowerCase()}`);
    app.tallies.textContent = parts.join(", ");
    app.warningsBox.textContent = resp.warnings.join("; ");
  }

  if (app.carousel && resp && idx !== null) {
    const sol = resp.solutions[idx];
    const flags: string[] = [];
    if (idx === resp.roundest_index) flags.push("roundest");
    if (idx === resp.best_conditioned_index) flags.push("best conditioned");
    const pos = app.carousel.pos + 1;
    const total = app.carousel.visible.length;
    app.carouselLabel.textContent =
      `${pos} / ${total}` + (sol.class ? ` ${sol.class.toLowerCase()}` : "") + (flags.length ? ` [${flags.join(", ")}]` : "");
    app.detailBox.textContent =
      `residual ${sol.residual}` +
      (sol.roundness !== undefined ? `, roundness ${sol.roundness}` : "") +
      (sol.condition !== undefined ? `, condition ${sol.condition}` : "");
  } else if (app.carousel) {
    app.carouselLabel.textContent = "0 / 0";
    app.detailBox.textContent = "";
  }
}
