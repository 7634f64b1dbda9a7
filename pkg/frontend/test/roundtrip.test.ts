/** Studio acceptance: round trips against recorded service behavior.
 *
 * The fixtures under test/fixtures were produced by the real service
 * (see make_fixtures.py): the edited-scenario PUT response, the network
 * regenerated from that exact edit, the sweep CSV, and the service's own
 * non-dominated answer for its rows.
 */
import { describe, expect, it } from "vitest";

import { ServiceClient } from "../src/api.js";
import { ConstraintEditor } from "../src/constraints.js";
import { parseSweepCsv, serializeSweepCsv } from "../src/csv.js";
import { ParallelCoords } from "../src/parallel.js";
import { StudioSession } from "../src/session.js";
import type { FeatureCollection } from "../src/types.js";
import { countByClass, renderPlan } from "../src/views.js";
import { fakeFetch, fixture, fixtureText } from "./helpers.js";

const scenarioFx = fixture("scenario.json");
const editedPutFx = fixture("scenario_edited_put.json");
const networkEditedFx = fixture("network_edited.json");
const paretoFx = fixture("pareto.json");

describe("acceptance: edit -> commit -> regenerate", () => {
  it("renders exactly the feature count of the service's GeoJSON", async () => {
    const { fetch, calls } = fakeFetch([
      { method: "GET", path: "/scenario", body: scenarioFx },
      { method: "PUT", path: "/scenario", body: editedPutFx },
      { method: "POST", path: "/generate?stage=network", body: networkEditedFx },
    ]);
    const session = new StudioSession(new ServiceClient("", fetch));
    await session.loadFromService();

    // the same gesture the fixture run committed: a three-vertex polyline
    const editor = new ConstraintEditor(session.scenario.field.elements);
    editor.beginStroke("polyline", 50, 50);
    editor.appendVertex(250, 180);
    editor.appendVertex(450, 220);
    const idx = editor.finishStroke({
      theta: 1.5707963,
      weight: 1.0,
      decay: 0.015,
      radius: 80.0,
      magnitude: 10.0,
    });
    expect(idx).not.toBeNull();

    session.applyDelta(editor.toDelta());
    expect(session.isStale("network")).toBe(true);

    const newHash = await session.commit();
    expect(newHash).toBe(editedPutFx.scenario_hash);
    expect(newHash).not.toBe(scenarioFx.scenario_hash);

    const view = await session.regenerate("network");
    expect(view.scenarioHash).toBe(networkEditedFx.scenario_hash);

    const payload = view.payload as FeatureCollection;
    const svg = renderPlan(payload, null);
    expect(countByClass(svg, "edge")).toBe(payload.features.length);
    expect(payload.features.length).toBeGreaterThan(0);
    expect(calls).toContain("PUT /scenario");
  });

  it("the committed element list matches what the service accepted", () => {
    const editor = new ConstraintEditor(scenarioFx.scenario.field.elements);
    editor.beginStroke("polyline", 50, 50);
    editor.appendVertex(250, 180);
    editor.appendVertex(450, 220);
    editor.finishStroke({
      theta: 1.5707963,
      weight: 1.0,
      decay: 0.015,
      radius: 80.0,
      magnitude: 10.0,
    });
    const committed = editor.applyTo(scenarioFx.scenario);
    const added = committed.field.elements.at(-1);
    expect(added).toEqual({
      kind: "polyline",
      coords: [[50, 50], [250, 180], [450, 220]],
      theta: 1.5707963,
      weight: 1.0,
      decay: 0.015,
      radius: 80.0,
      magnitude: 10.0,
    });
  });
});

describe("acceptance: pareto toggle", () => {
  it("highlights exactly the service-computed non-dominated set", async () => {
    const table = parseSweepCsv(fixtureText("sweep.csv"));
    const pc = new ParallelCoords(table);

    const { fetch } = fakeFetch([
      { method: "POST", path: "/pareto", body: { indices: paretoFx.indices } },
    ]);
    const client = new ServiceClient("", fetch);
    const points = table.rows.map((r) => {
      const p: Record<string, number> = {};
      for (const axis of pc.axes) p[axis] = r[axis] as number;
      return p;
    });
    const indices = await client.pareto({
      points,
      objectives: paretoFx.objectives,
    });
    pc.setParetoHighlight(indices);

    expect(pc.paretoHighlight()).toEqual([...paretoFx.indices].sort((a: number, b: number) => a - b));
    const svg = pc.renderSvg();
    expect(countByClass(svg, "pareto")).toBe(paretoFx.indices.length);
    expect(countByClass(svg, "dominated")).toBe(
      table.rows.length - paretoFx.indices.length,
    );
    // the highlighted data-row ids are exactly the service's answer
    const highlighted = [...svg.matchAll(/class="[^"]*\bpareto\b[^"]*" data-row="(\d+)"/g)]
      .map((m) => Number(m[1]))
      .sort((a, b) => a - b);
    expect(highlighted).toEqual([...paretoFx.indices].sort((a: number, b: number) => a - b));
  });
});

describe("acceptance: csv round trip", () => {
  it("reloading the CSV reproduces the identical unfiltered view", () => {
    const text = fixtureText("sweep.csv");
    const first = new ParallelCoords(parseSweepCsv(text));
    const before = first.renderSvg();

    first.setBrush("out:FAR", ...first.domain("out:FAR"));
    first.setBrush("in:population", 0, 1); // excludes everything
    expect(first.visibleRows()).toEqual([]);
    first.clearBrush();

    const reloaded = new ParallelCoords(parseSweepCsv(text));
    expect(first.renderSvg()).toBe(before);
    expect(reloaded.renderSvg()).toBe(before);
    expect(serializeSweepCsv(reloaded.table)).toBe(text);
  });
});
