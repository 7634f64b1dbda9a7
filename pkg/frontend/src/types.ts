/** Shared payload shapes mirroring the service's JSON. */

export type Stage = "field" | "network" | "parcels" | "masses" | "metrics";

export interface GeoJSONFeature {
  type: "Feature";
  geometry: { type: string; coordinates: unknown };
  properties: Record<string, unknown>;
}

export interface FeatureCollection {
  type: "FeatureCollection";
  features: GeoJSONFeature[];
}

export interface FieldPayload {
  grid: { origin: [number, number]; width: number; height: number; nx: number; ny: number };
  angle: number[][];
  magnitude: number[][];
}

export interface MetricsPayload {
  metrics: Record<string, number>;
  unmet_floor_area: number;
}

export type StagePayload = FeatureCollection | FieldPayload | MetricsPayload;

export interface GenerateResponse {
  scenario_hash: string;
  stage: Stage;
  payload: StagePayload;
}

export interface ScenarioResponse {
  scenario_hash: string;
  scenario: ScenarioDict;
}

/** The scenario document is an open dictionary; the studio only touches
 *  the constraint-element list and leaves everything else untouched. */
export type ScenarioDict = Record<string, any>;

export type ElementKind = "point" | "polyline" | "polygon";

export interface ConstraintElementDict {
  kind: ElementKind;
  coords: number[] | number[][];
  theta: number;
  weight: number;
  decay: number;
  radius: number;
  magnitude?: number;
}

export interface StageError {
  stage: string;
  error: string;
}

export interface ParetoRequest {
  points: Record<string, number>[];
  objectives: [string, "min" | "max"][];
}
