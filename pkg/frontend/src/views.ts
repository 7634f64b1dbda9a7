/** Stage views as pure SVG string builders.
 *
 * Every coordinate comes straight out of a service payload; the only
 * client-side math is the affine screen/axonometric projection.  Element
 * counts therefore mirror the payload feature counts one to one.
 */
import type { FeatureCollection, FieldPayload } from "./types.js";

interface Box {
  minx: number;
  miny: number;
  maxx: number;
  maxy: number;
}

function featureBounds(fcs: FeatureCollection[]): Box {
  const box: Box = { minx: Infinity, miny: Infinity, maxx: -Infinity, maxy: -Infinity };
  const eat = (pt: number[]) => {
    box.minx = Math.min(box.minx, pt[0]);
    box.miny = Math.min(box.miny, pt[1]);
    box.maxx = Math.max(box.maxx, pt[0]);
    box.maxy = Math.max(box.maxy, pt[1]);
  };
  for (const fc of fcs) {
    for (const f of fc.features) {
      const g = f.geometry;
      if (g.type === "LineString") (g.coordinates as number[][]).forEach(eat);
      else if (g.type === "Polygon") (g.coordinates as number[][][]).forEach((r) => r.forEach(eat));
      else if (g.type === "Point") eat(g.coordinates as number[]);
    }
  }
  if (!Number.isFinite(box.minx)) return { minx: 0, miny: 0, maxx: 1, maxy: 1 };
  return box;
}

function planProjector(box: Box, size: number) {
  const span = Math.max(box.maxx - box.minx, box.maxy - box.miny) || 1;
  const s = size / span;
  return (x: number, y: number): [number, number] => [
    (x - box.minx) * s,
    (box.maxy - y) * s,
  ];
}

const CLUSTER_FILL: Record<string, string> = { large: "#c9d8ea", small: "#dce9d2" };

export function heightColor(h: number, hMax: number): string {
  const t = hMax <= 0 ? 0 : Math.min(1, h / hMax);
  const r = Math.round(70 + t * 130);
  const g = Math.round(130 - t * 90);
  const b = Math.round(180 - t * 140);
  return `#${((1 << 24) | (r << 16) | (g << 8) | b).toString(16).slice(1)}`;
}

function svgOpen(size: number, w = size, h = size): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" width="${w}" height="${h}" viewBox="0 0 ${w} ${h}">`;
}

/** Tensor field as line glyphs on a strided sub-grid. */
export function renderFieldGlyphs(field: FieldPayload, size = 640, maxGlyphs = 48): string {
  const { nx, ny, origin, width, height } = field.grid;
  const strideX = Math.max(1, Math.ceil(nx / maxGlyphs));
  const strideY = Math.max(1, Math.ceil(ny / maxGlyphs));
  const dx = width / (nx - 1);
  const dy = height / (ny - 1);
  const box: Box = {
    minx: origin[0],
    miny: origin[1],
    maxx: origin[0] + width,
    maxy: origin[1] + height,
  };
  const proj = planProjector(box, size);
  const glyphLen = (size / maxGlyphs) * 0.45;

  let maxMag = 0;
  for (const row of field.magnitude) for (const v of row) maxMag = Math.max(maxMag, v);

  const parts = [svgOpen(size), `<g class="glyphs">`];
  for (let j = 0; j < ny; j += strideY) {
    for (let i = 0; i < nx; i += strideX) {
      const angle = field.angle[j][i];
      const mag = field.magnitude[j][i];
      const [cx, cy] = proj(origin[0] + i * dx, origin[1] + j * dy);
      const len = glyphLen * (maxMag > 0 ? 0.25 + 0.75 * (mag / maxMag) : 0);
      const ux = Math.cos(angle) * len;
      const uy = -Math.sin(angle) * len;
      parts.push(
        `<line class="glyph" x1="${(cx - ux).toFixed(1)}" y1="${(cy - uy).toFixed(1)}" ` +
          `x2="${(cx + ux).toFixed(1)}" y2="${(cy + uy).toFixed(1)}" ` +
          `stroke="#456" stroke-width="1"/>`,
      );
    }
  }
  parts.push(`</g></svg>`);
  return parts.join("\n");
}

/** 2D plan of network and/or parcel feature collections. */
export function renderPlan(
  network: FeatureCollection | null,
  parcels: FeatureCollection | null = null,
  size = 640,
): string {
  const fcs = [network, parcels].filter((f): f is FeatureCollection => f !== null);
  const proj = planProjector(featureBounds(fcs), size);
  const parts = [svgOpen(size)];

  parts.push(`<g class="parcels">`);
  if (parcels) {
    for (const f of parcels.features) {
      const rings = f.geometry.coordinates as number[][][];
      const pts = rings[0].map(([x, y]) => proj(x, y).map((v) => v.toFixed(1)).join(",")).join(" ");
      const buildable = f.properties["buildable"] !== false;
      const fill = buildable
        ? CLUSTER_FILL[String(f.properties["cluster"])] ?? "#dddddd"
        : "#eceae6";
      parts.push(
        `<polygon class="parcel" points="${pts}" fill="${fill}" stroke="#aaa" stroke-width="0.5"/>`,
      );
    }
  }
  parts.push(`</g><g class="streets">`);
  if (network) {
    for (const f of network.features) {
      const coords = f.geometry.coordinates as number[][];
      const pts = coords.map(([x, y]) => proj(x, y).map((v) => v.toFixed(1)).join(",")).join(" ");
      const level = Number(f.properties["level"] ?? 0);
      parts.push(
        `<polyline class="edge" data-level="${level}" points="${pts}" fill="none" ` +
          `stroke="#444" stroke-width="${Math.max(1, 3 - level)}"/>`,
      );
    }
  }
  parts.push(`</g></svg>`);
  return parts.join("\n");
}

/** Extruded massing view: axonometric projection, painter's order, walls
 *  and roof per building tinted by height. */
export function renderMasses3D(masses: FeatureCollection, size = 640): string {
  const box = featureBounds([masses]);
  const span = Math.max(box.maxx - box.minx, box.maxy - box.miny) || 1;
  const s = (size * 0.55) / span;
  const ANG = Math.PI / 6;
  let hMax = 0;
  for (const f of masses.features) hMax = Math.max(hMax, Number(f.properties["height_m"] ?? 0));

  const proj = (x: number, y: number, z: number): [number, number] => {
    const u = (x - box.minx) * s;
    const v = (y - box.miny) * s;
    return [
      size * 0.22 + (u - v) * Math.cos(ANG) + size * 0.28,
      size * 0.78 - (u + v) * Math.sin(ANG) - z * s * 0.9,
    ];
  };

  const order = masses.features
    .map((f, i) => {
      const ring = (f.geometry.coordinates as number[][][])[0];
      const cx = ring.reduce((a, p) => a + p[0], 0) / ring.length;
      const cy = ring.reduce((a, p) => a + p[1], 0) / ring.length;
      return { i, depth: cx + cy };
    })
    .sort((a, b) => a.depth - b.depth);

  const parts = [svgOpen(size), `<g class="masses3d">`];
  for (const { i } of order) {
    const f = masses.features[i];
    const h = Number(f.properties["height_m"] ?? 0);
    const ring = (f.geometry.coordinates as number[][][])[0];
    const fill = heightColor(h, hMax);
    const wallFill = heightColor(h * 0.82, hMax);
    const group = [`<g class="mass" data-height="${h}">`];
    for (let k = 0; k < ring.length - 1; k++) {
      const [ax, ay] = ring[k];
      const [bx, by] = ring[k + 1];
      const quad = [proj(ax, ay, 0), proj(bx, by, 0), proj(bx, by, h), proj(ax, ay, h)]
        .map(([px, py]) => `${px.toFixed(1)},${py.toFixed(1)}`)
        .join(" ");
      group.push(
        `<polygon class="wall" points="${quad}" fill="${wallFill}" stroke="#223" stroke-width="0.3"/>`,
      );
    }
    const roof = ring
      .map(([x, y]) => proj(x, y, h))
      .map(([px, py]) => `${px.toFixed(1)},${py.toFixed(1)}`)
      .join(" ");
    group.push(
      `<polygon class="roof" points="${roof}" fill="${fill}" stroke="#223" stroke-width="0.4"/>`,
      `</g>`,
    );
    parts.push(group.join("\n"));
  }
  parts.push(`</g></svg>`);
  return parts.join("\n");
}

export function countByClass(svg: string, cls: string): number {
  let count = 0;
  for (const match of svg.matchAll(/class="([^"]*)"/g)) {
    if (match[1].split(/\s+/).includes(cls)) count++;
  }
  return count;
}
