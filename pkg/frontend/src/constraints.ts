/** Constraint-element editor model.
 *
 * Canvas gestures build point / polyline / polygon elements in site
 * coordinates; per-element sliders adjust rotation, weight, decay and
 * influence radius with their bounds enforced client-side (a negative
 * weight is unrepresentable).  The model emits a scenario delta on
 * commit; it never generates any geometry itself.
 */
import type { ConstraintElementDict, ElementKind, ScenarioDict } from "./types.js";

const TWO_PI = Math.PI * 2;

export const SLIDER_BOUNDS: Record<string, [number, number]> = {
  theta: [0, TWO_PI],
  weight: [0, 5],
  decay: [0, 0.2],
  radius: [0, 1000],
  magnitude: [0.1, 100],
};

export interface EditorElement extends ConstraintElementDict {
  /** validation message from the service, shown inline on the element */
  error?: string;
}

export class ConstraintEditor {
  elements: EditorElement[] = [];
  private draft: { kind: ElementKind; coords: number[][] } | null = null;

  constructor(initial: ConstraintElementDict[] = []) {
    this.elements = initial.map((e) => ({ ...e }));
  }

  /** Single-click gesture: a point element. */
  addPoint(x: number, y: number, props: Partial<ConstraintElementDict> = {}): number {
    return this.pushElement({ kind: "point", coords: [x, y], ...this.defaults(props) });
  }

  /** Drag / multi-click gesture: start a polyline or polygon. */
  beginStroke(kind: Exclude<ElementKind, "point">, x: number, y: number): void {
    this.draft = { kind, coords: [[x, y]] };
  }

  appendVertex(x: number, y: number): void {
    if (!this.draft) throw new Error("no stroke in progress");
    this.draft.coords.push([x, y]);
  }

  /** Finish the stroke; returns the element index or null when the
   *  gesture was too short to form the geometry. */
  finishStroke(props: Partial<ConstraintElementDict> = {}): number | null {
    if (!this.draft) return null;
    const { kind, coords } = this.draft;
    this.draft = null;
    const needed = kind === "polygon" ? 3 : 2;
    if (coords.length < needed) return null;
    return this.pushElement({ kind, coords, ...this.defaults(props) });
  }

  moveElement(index: number, dx: number, dy: number): void {
    const el = this.at(index);
    if (el.kind === "point") {
      const [x, y] = el.coords as number[];
      el.coords = [x + dx, y + dy];
    } else {
      el.coords = (el.coords as number[][]).map(([x, y]) => [x + dx, y + dy]);
    }
  }

  deleteElement(index: number): void {
    this.at(index);
    this.elements.splice(index, 1);
  }

  deleteAll(): void {
    this.elements = [];
  }

  /** Slider input: clamped to the control's bounds, theta wrapped. */
  setSlider(index: number, name: keyof typeof SLIDER_BOUNDS, value: number): number {
    const el = this.at(index);
    const [lo, hi] = SLIDER_BOUNDS[name];
    let v = Math.min(hi, Math.max(lo, value));
    if (name === "theta") v = ((value % TWO_PI) + TWO_PI) % TWO_PI;
    (el as unknown as Record<string, number>)[name] = v;
    return v;
  }

  setElementError(index: number, message: string | undefined): void {
    this.at(index).error = message;
  }

  /** Scenario delta: the full replacement element list under field/. */
  toDelta(): { field: { elements: ConstraintElementDict[] } } {
    return {
      field: {
        elements: this.elements.map(({ error, ...el }) => ({ ...el })),
      },
    };
  }

  /** New scenario document with this editor's elements applied. */
  applyTo(scenario: ScenarioDict): ScenarioDict {
    const next = JSON.parse(JSON.stringify(scenario)) as ScenarioDict;
    next.field = { ...(next.field ?? {}), ...this.toDelta().field };
    return next;
  }

  private at(index: number): EditorElement {
    const el = this.elements[index];
    if (!el) throw new Error(`no element at index ${index}`);
    return el;
  }

  private pushElement(el: ConstraintElementDict): number {
    this.elements.push({ ...el });
    return this.elements.length - 1;
  }

  private defaults(props: Partial<ConstraintElementDict>) {
    return {
      theta: 0,
      weight: 1,
      decay: 0,
      radius: 100,
      magnitude: 10,
      ...props,
    };
  }
}
