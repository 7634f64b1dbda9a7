/** Studio session state: the current scenario, per-stage views keyed by
 *  the scenario hash they were computed from, and staleness tracking for
 *  local edits that have not reached the service yet. */
import { ServiceClient, ServiceError } from "./api.js";
import type { ScenarioDict, Stage, StagePayload } from "./types.js";

export interface StageView {
  stage: Stage;
  payload: StagePayload;
  scenarioHash: string;
}

export interface FailureInfo {
  stage: string;
  message: string;
  /** last stage that still has a usable view */
  lastGood: Stage | null;
}

const STAGE_ORDER: Stage[] = ["field", "network", "parcels", "masses", "metrics"];

export class StudioSession {
  scenario: ScenarioDict = {};
  serverHash: string | null = null;
  localEdits = false;
  views = new Map<Stage, StageView>();
  lastFailure: FailureInfo | null = null;
  selectedStage: Stage = "network";

  constructor(private readonly client: ServiceClient) {}

  async loadFromService(): Promise<void> {
    const body = await this.client.getScenario();
    this.scenario = body.scenario;
    this.serverHash = body.scenario_hash;
    this.localEdits = false;
  }

  /** Apply a local edit; views become stale until committed. */
  applyDelta(delta: ScenarioDict): void {
    this.scenario = deepMerge(this.scenario, delta);
    this.localEdits = true;
  }

  /** PUT the scenario; validation errors propagate as ServiceError. */
  async commit(): Promise<string> {
    const body = await this.client.putScenario(this.scenario);
    this.serverHash = body.scenario_hash;
    this.localEdits = false;
    return body.scenario_hash;
  }

  /** A view is stale when local edits diverge from the response hash. */
  isStale(stage: Stage): boolean {
    const view = this.views.get(stage);
    if (!view) return true;
    return this.localEdits || view.scenarioHash !== this.serverHash;
  }

  /** Regenerate one stage view; on pipeline failure the previous views
   *  are kept and the failure records which stage broke. */
  async regenerate(stage: Stage): Promise<StageView> {
    try {
      const body = await this.client.generate(stage);
      const view: StageView = {
        stage,
        payload: body.payload,
        scenarioHash: body.scenario_hash,
      };
      this.views.set(stage, view);
      this.lastFailure = null;
      return view;
    } catch (err) {
      if (err instanceof ServiceError && err.stage) {
        this.lastFailure = {
          stage: err.stage,
          message: String((err.detail as { error?: string }).error ?? err.message),
          lastGood: this.lastGoodStage(),
        };
      }
      throw err;
    }
  }

  lastGoodStage(): Stage | null {
    for (let i = STAGE_ORDER.length - 1; i >= 0; i--) {
      if (this.views.has(STAGE_ORDER[i])) return STAGE_ORDER[i];
    }
    return null;
  }
}

function deepMerge(base: ScenarioDict, patch: ScenarioDict): ScenarioDict {
  const out: ScenarioDict = Array.isArray(base) ? [...(base as unknown[])] : { ...base };
  for (const [key, value] of Object.entries(patch)) {
    if (
      value !== null &&
      typeof value === "object" &&
      !Array.isArray(value) &&
      typeof out[key] === "object" &&
      out[key] !== null &&
      !Array.isArray(out[key])
    ) {
      out[key] = deepMerge(out[key], value as ScenarioDict);
    } else {
      out[key] = value;
    }
  }
  return out;
}
