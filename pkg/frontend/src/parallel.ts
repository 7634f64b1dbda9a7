/** Parallel-coordinates view model over a sweep table.
 *
 * One polyline per variant across the in:/out: axes.  Axis brushes are
 * pure view state (they filter without touching the table), and a Pareto
 * highlight set - always computed by the service, never locally - dims
 * everything outside it.
 */
import type { SweepTable } from "./csv.js";
import { numericColumns } from "./csv.js";

export interface Brush {
  lo: number;
  hi: number;
}

export interface ParallelLayout {
  width: number;
  height: number;
  marginX: number;
  marginTop: number;
  marginBottom: number;
}

const DEFAULT_LAYOUT: ParallelLayout = {
  width: 960,
  height: 360,
  marginX: 60,
  marginTop: 28,
  marginBottom: 16,
};

export class ParallelCoords {
  readonly axes: string[];
  private readonly domains = new Map<string, [number, number]>();
  private brushes = new Map<string, Brush>();
  private paretoRows: Set<number> | null = null;
  selectedRow: number | null = null;

  constructor(readonly table: SweepTable) {
    this.axes = numericColumns(table);
    for (const axis of this.axes) {
      let lo = Infinity;
      let hi = -Infinity;
      for (const row of table.rows) {
        const v = row[axis] as number;
        lo = Math.min(lo, v);
        hi = Math.max(hi, v);
      }
      if (lo === hi) {
        lo -= 0.5;
        hi += 0.5;
      }
      this.domains.set(axis, [lo, hi]);
    }
  }

  rowCount(): number {
    return this.table.rows.length;
  }

  domain(axis: string): [number, number] {
    const d = this.domains.get(axis);
    if (!d) throw new Error(`unknown axis ${axis}`);
    return d;
  }

  setBrush(axis: string, lo: number, hi: number): void {
    this.domain(axis);
    this.brushes.set(axis, { lo: Math.min(lo, hi), hi: Math.max(lo, hi) });
  }

  clearBrush(axis?: string): void {
    if (axis === undefined) this.brushes.clear();
    else this.brushes.delete(axis);
  }

  brushCount(): number {
    return this.brushes.size;
  }

  /** Row indices passing every active brush. */
  visibleRows(): number[] {
    const out: number[] = [];
    for (let i = 0; i < this.table.rows.length; i++) {
      if (this.rowVisible(i)) out.push(i);
    }
    return out;
  }

  rowVisible(i: number): boolean {
    for (const [axis, b] of this.brushes) {
      const v = this.table.rows[i][axis] as number;
      if (v < b.lo || v > b.hi) return false;
    }
    return true;
  }

  /** Service-computed non-dominated row indices (null clears the toggle). */
  setParetoHighlight(indices: number[] | null): void {
    this.paretoRows = indices === null ? null : new Set(indices);
  }

  paretoHighlight(): number[] {
    return this.paretoRows === null ? [] : [...this.paretoRows].sort((a, b) => a - b);
  }

  selectRow(i: number | null): void {
    if (i !== null && (i < 0 || i >= this.table.rows.length)) {
      throw new Error(`row ${i} out of range`);
    }
    this.selectedRow = i;
  }

  /** Variant parameters of a row, for loading its bundle elsewhere. */
  rowParams(i: number): Record<string, number> {
    const params: Record<string, number> = {};
    for (const axis of this.axes) {
      if (axis.startsWith("in:")) {
        params[axis.slice(3)] = this.table.rows[i][axis] as number;
      }
    }
    return params;
  }

  renderSvg(layout: Partial<ParallelLayout> = {}): string {
    const L = { ...DEFAULT_LAYOUT, ...layout };
    const innerW = L.width - 2 * L.marginX;
    const innerH = L.height - L.marginTop - L.marginBottom;
    const stepX = this.axes.length > 1 ? innerW / (this.axes.length - 1) : 0;

    const xOf = (axisIdx: number) => L.marginX + axisIdx * stepX;
    const yOf = (axis: string, v: number) => {
      const [lo, hi] = this.domain(axis);
      const t = (v - lo) / (hi - lo);
      return L.marginTop + (1 - t) * innerH;
    };

    const parts: string[] = [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${L.width}" height="${L.height}" viewBox="0 0 ${L.width} ${L.height}">`,
      `<g class="axes">`,
    ];
    this.axes.forEach((axis, k) => {
      const x = xOf(k).toFixed(1);
      parts.push(
        `<line class="axis" data-axis="${axis}" x1="${x}" y1="${L.marginTop}" x2="${x}" y2="${L.marginTop + innerH}" stroke="#999"/>`,
        `<text class="axis-label" x="${x}" y="${L.marginTop - 10}" text-anchor="middle" font-size="10">${axis}</text>`,
      );
    });
    parts.push(`</g><g class="variants">`);

    this.table.rows.forEach((row, i) => {
      const pts = this.axes
        .map((axis, k) => `${xOf(k).toFixed(1)},${yOf(axis, row[axis] as number).toFixed(1)}`)
        .join(" ");
      const classes = ["variant"];
      if (!this.rowVisible(i)) classes.push("brushed-out");
      if (this.paretoRows !== null) {
        classes.push(this.paretoRows.has(i) ? "pareto" : "dominated");
      }
      if (this.selectedRow === i) classes.push("selected");
      parts.push(
        `<polyline class="${classes.join(" ")}" data-row="${i}" points="${pts}" fill="none"/>`,
      );
    });
    parts.push(`</g></svg>`);
    return parts.join("\n");
  }
}
