/** Thin typed client for the generation service.
 *
 * The studio performs no geometry work of its own: everything rendered is
 * byte-derived from these responses.
 */
import type {
  GenerateResponse,
  ParetoRequest,
  ScenarioDict,
  ScenarioResponse,
  Stage,
  StageError,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(message);
  }

  /** Stage name when the failure happened inside the pipeline. */
  get stage(): string | null {
    const d = this.detail as StageError | undefined;
    return d && typeof d === "object" && "stage" in d ? String(d.stage) : null;
  }

  /** Per-field validation messages from a rejected scenario. */
  get validationErrors(): string[] {
    const d = this.detail as { errors?: string[] } | undefined;
    return d && typeof d === "object" && Array.isArray(d.errors) ? d.errors : [];
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    const detail = (body as { detail?: unknown }).detail ?? body;
    throw new ServiceError(`service responded ${resp.status}`, resp.status, detail);
  }
  return body as T;
}

export class ServiceClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  async putScenario(scenario: ScenarioDict): Promise<{ scenario_hash: string }> {
    const resp = await this.fetchImpl(`${this.base}/scenario`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(scenario),
    });
    return asJson(resp);
  }

  async getScenario(): Promise<ScenarioResponse> {
    return asJson(await this.fetchImpl(`${this.base}/scenario`));
  }

  async generate(stage: Stage, params?: Record<string, unknown>): Promise<GenerateResponse> {
    const resp = await this.fetchImpl(`${this.base}/generate?stage=${stage}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params ? { params } : {}),
    });
    return asJson(resp);
  }

  async startSweep(space: Record<string, unknown>, n?: number): Promise<{ job_id: string }> {
    const resp = await this.fetchImpl(`${this.base}/sweep`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(n ? { space, n } : { space }),
    });
    return asJson(resp);
  }

  /** Resolves to CSV text once the job completes, null while running. */
  async pollSweep(jobId: string): Promise<string | null> {
    const resp = await this.fetchImpl(`${this.base}/sweep/${jobId}`);
    const ctype = resp.headers.get("content-type") ?? "";
    if (resp.ok && ctype.startsWith("text/csv")) {
      return resp.text();
    }
    if (!resp.ok && resp.status !== 409) {
      await asJson(resp);
    }
    return null;
  }

  async pareto(request: ParetoRequest): Promise<number[]> {
    const resp = await this.fetchImpl(`${this.base}/pareto`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    const body = await asJson<{ indices: number[] }>(resp);
    return body.indices;
  }

  async health(): Promise<{ ok: boolean; scenario_hash: string | null }> {
    return asJson(await this.fetchImpl(`${this.base}/healthz`));
  }
}
