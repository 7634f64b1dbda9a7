/** Browser wiring: gestures, sliders, stage buttons, sweep explorer.
 *
 * All state lives in the models (session / editor / parallel coords);
 * this file only moves DOM events in and SVG strings out.
 */
import { ServiceClient, ServiceError } from "./api.js";
import { ConstraintEditor, SLIDER_BOUNDS } from "./constraints.js";
import { parseSweepCsv } from "./csv.js";
import { ParallelCoords } from "./parallel.js";
import { StudioSession } from "./session.js";
import type { FeatureCollection, FieldPayload, Stage } from "./types.js";
import { renderFieldGlyphs, renderMasses3D, renderPlan } from "./views.js";

const REGEN_DEBOUNCE_MS = 300;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const client = new ServiceClient("");
const session = new StudioSession(client);
let editor = new ConstraintEditor();
let coords: ParallelCoords | null = null;
let selected = -1;
let strokeKind: "point" | "polyline" | "polygon" = "point";
let regenTimer: number | undefined;

function setStatus(text: string, bad = false) {
  const el = $("status");
  el.textContent = text;
  el.className = bad ? "bad" : "";
}

function hashBadge() {
  const stale = session.isStale(session.selectedStage) ? " (stale)" : "";
  $("hash").textContent = `scenario ${session.serverHash ?? "?"}${stale}`;
}

async function showStage(stage: Stage) {
  session.selectedStage = stage;
  try {
    const view = await session.regenerate(stage);
    const host = $("view");
    if (stage === "field") {
      host.innerHTML = renderFieldGlyphs(view.payload as FieldPayload);
    } else if (stage === "network") {
      host.innerHTML = renderPlan(view.payload as FeatureCollection, null);
    } else if (stage === "parcels") {
      host.innerHTML = renderPlan(null, view.payload as FeatureCollection);
    } else if (stage === "masses") {
      host.innerHTML = renderMasses3D(view.payload as FeatureCollection);
    } else {
      const metrics = (view.payload as { metrics: Record<string, number> }).metrics;
      host.innerHTML = `<pre>${JSON.stringify(metrics, null, 1)}</pre>`;
    }
    setStatus(`${stage} @ ${view.scenarioHash}`);
  } catch (err) {
    if (err instanceof ServiceError && session.lastFailure) {
      const f = session.lastFailure;
      setStatus(`stage ${f.stage} failed: ${f.message} (showing ${f.lastGood ?? "nothing"})`, true);
    } else {
      setStatus(String(err), true);
    }
  }
  hashBadge();
}

function scheduleRegenerate() {
  window.clearTimeout(regenTimer);
  regenTimer = window.setTimeout(async () => {
    try {
      session.applyDelta(editor.toDelta());
      await session.commit();
      await showStage(session.selectedStage);
    } catch (err) {
      if (err instanceof ServiceError && selected >= 0) {
        editor.setElementError(selected, err.validationErrors.join("; "));
        setStatus(err.validationErrors.join("; "), true);
      }
    }
  }, REGEN_DEBOUNCE_MS);
}

function canvasPoint(ev: MouseEvent): [number, number] {
  const rect = ($("view") as HTMLElement).getBoundingClientRect();
  const bounds = session.scenario.boundary?.rect ?? [0, 0, 500, 500];
  const [x0, y0, w, h] = bounds;
  const px = ((ev.clientX - rect.left) / rect.width) * w + x0;
  const py = (1 - (ev.clientY - rect.top) / rect.height) * h + y0;
  return [px, py];
}

function bindSliders() {
  for (const name of Object.keys(SLIDER_BOUNDS)) {
    const input = $(`slider-${name}`) as HTMLInputElement;
    const [lo, hi] = SLIDER_BOUNDS[name];
    input.min = String(lo);
    input.max = String(hi);
    input.step = "any";
    input.addEventListener("input", () => {
      if (selected < 0) return;
      const applied = editor.setSlider(selected, name as never, Number(input.value));
      input.value = String(applied);
      scheduleRegenerate();
    });
  }
}

function bindCanvas() {
  const host = $("view");
  host.addEventListener("click", (ev) => {
    const [x, y] = canvasPoint(ev as MouseEvent);
    if (strokeKind === "point") {
      selected = editor.addPoint(x, y);
      scheduleRegenerate();
    } else if ((ev as MouseEvent).detail === 2) {
      const idx = editor.finishStroke();
      if (idx !== null) {
        selected = idx;
        scheduleRegenerate();
      }
    } else if (editorHasStroke()) {
      editor.appendVertex(x, y);
    } else {
      editor.beginStroke(strokeKind, x, y);
    }
  });
}

let strokeOpen = false;
function editorHasStroke() {
  return strokeOpen;
}

function bindToolbar() {
  for (const kind of ["point", "polyline", "polygon"] as const) {
    $(`tool-${kind}`).addEventListener("click", () => {
      strokeKind = kind;
      strokeOpen = kind !== "point";
    });
  }
  $("tool-delete").addEventListener("click", () => {
    if (selected >= 0) {
      editor.deleteElement(selected);
      selected = -1;
      scheduleRegenerate();
    }
  });
  $("tool-clear").addEventListener("click", () => {
    editor.deleteAll();
    selected = -1;
    scheduleRegenerate();
  });
  for (const stage of ["field", "network", "parcels", "masses", "metrics"] as const) {
    $(`stage-${stage}`).addEventListener("click", () => void showStage(stage));
  }
}

function renderCoords() {
  if (!coords) return;
  $("explorer").innerHTML = coords.renderSvg();
  $("explorer").querySelectorAll("polyline.variant").forEach((el) => {
    el.addEventListener("click", async () => {
      const row = Number((el as SVGElement).dataset["row"]);
      coords!.selectRow(row);
      const params = coords!.rowParams(row);
      const resp = await client.generate("masses", params);
      $("view").innerHTML = renderMasses3D(resp.payload as FeatureCollection);
      renderCoords();
    });
  });
}

function bindExplorer() {
  ($("csv-file") as HTMLInputElement).addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      coords = new ParallelCoords(parseSweepCsv(await file.text()));
      renderCoords();
      setStatus(`loaded ${coords.rowCount()} variants`);
    } catch (err) {
      setStatus(String(err), true);
    }
  });

  ($("pareto-toggle") as HTMLInputElement).addEventListener("change", async (ev) => {
    if (!coords) return;
    const on = (ev.target as HTMLInputElement).checked;
    if (!on) {
      coords.setParetoHighlight(null);
    } else {
      const axes = coords.axes.filter((a) => a.startsWith("out:"));
      const objectives = axes.map(
        (a) => [a, a.includes("betweenness") || a.includes("energy") ? "min" : "max"] as [string, "min" | "max"],
      );
      const points = coords.table.rows.map((r) => {
        const p: Record<string, number> = {};
        for (const a of coords!.axes) p[a] = r[a] as number;
        return p;
      });
      coords.setParetoHighlight(await client.pareto({ points, objectives }));
    }
    renderCoords();
  });
}

async function start() {
  await session.loadFromService();
  editor = new ConstraintEditor(session.scenario.field?.elements ?? []);
  bindSliders();
  bindCanvas();
  bindToolbar();
  bindExplorer();
  hashBadge();
  await showStage("network");
}

start().catch((err) => setStatus(String(err), true));
