import { describe, expect, it } from "vitest";

import { ConstraintEditor, SLIDER_BOUNDS } from "../src/constraints.js";
import { fixture } from "./helpers.js";

describe("constraint editor gestures", () => {
  it("adds a point element with defaults", () => {
    const ed = new ConstraintEditor();
    const idx = ed.addPoint(120, 340);
    expect(idx).toBe(0);
    expect(ed.elements[0].kind).toBe("point");
    expect(ed.elements[0].coords).toEqual([120, 340]);
    expect(ed.elements[0].weight).toBe(1);
  });

  it("builds a polyline from a stroke", () => {
    const ed = new ConstraintEditor();
    ed.beginStroke("polyline", 0, 0);
    ed.appendVertex(50, 20);
    ed.appendVertex(100, 30);
    const idx = ed.finishStroke({ decay: 0.01 });
    expect(idx).toBe(0);
    expect(ed.elements[0].coords).toEqual([[0, 0], [50, 20], [100, 30]]);
    expect(ed.elements[0].decay).toBe(0.01);
  });

  it("rejects strokes too short for their geometry", () => {
    const ed = new ConstraintEditor();
    ed.beginStroke("polygon", 0, 0);
    ed.appendVertex(10, 0);
    expect(ed.finishStroke()).toBeNull();
    expect(ed.elements).toHaveLength(0);
  });

  it("moves point and polyline elements", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(10, 10);
    ed.beginStroke("polyline", 0, 0);
    ed.appendVertex(5, 5);
    ed.finishStroke();
    ed.moveElement(0, 3, -2);
    ed.moveElement(1, 1, 1);
    expect(ed.elements[0].coords).toEqual([13, 8]);
    expect(ed.elements[1].coords).toEqual([[1, 1], [6, 6]]);
  });

  it("deletes one element or all of them", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(1, 1);
    ed.addPoint(2, 2);
    ed.deleteElement(0);
    expect(ed.elements).toHaveLength(1);
    expect(ed.elements[0].coords).toEqual([2, 2]);
    ed.deleteAll();
    expect(ed.toDelta()).toEqual({ field: { elements: [] } });
  });
});

describe("slider bounds", () => {
  it("blocks negative weights client-side", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(0, 0);
    const applied = ed.setSlider(0, "weight", -3);
    expect(applied).toBe(SLIDER_BOUNDS.weight[0]);
    expect(ed.elements[0].weight).toBe(0);
  });

  it("wraps rotation into [0, 2pi)", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(0, 0);
    const applied = ed.setSlider(0, "theta", -Math.PI / 2);
    expect(applied).toBeCloseTo((3 * Math.PI) / 2, 12);
  });

  it("clamps decay and radius to non-negative", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(0, 0);
    expect(ed.setSlider(0, "decay", -1)).toBe(0);
    expect(ed.setSlider(0, "radius", -5)).toBe(0);
  });
});

describe("scenario deltas", () => {
  it("applyTo replaces only the element list", () => {
    const scenario = fixture("scenario.json").scenario;
    const ed = new ConstraintEditor(scenario.field.elements);
    ed.addPoint(50, 60, { weight: 2 });
    const next = ed.applyTo(scenario);
    expect(next.field.elements).toHaveLength(scenario.field.elements.length + 1);
    expect(next.field.theta).toBe(scenario.field.theta);
    expect(next.boundary).toEqual(scenario.boundary);
    expect(scenario.field.elements).toHaveLength(1); // original untouched
  });

  it("inline validation errors attach to the offending element", () => {
    const ed = new ConstraintEditor();
    ed.addPoint(0, 0);
    ed.setElementError(0, "scenario/field/elements/0: bad");
    expect(ed.elements[0].error).toContain("elements/0");
    expect(ed.toDelta().field.elements[0]).not.toHaveProperty("error");
  });
});
