import { describe, expect, it } from "vitest";

import { ServiceClient, ServiceError } from "../src/api.js";
import { StudioSession } from "../src/session.js";
import { fakeFetch, fixture } from "./helpers.js";

const scenarioFx = fixture("scenario.json");
const networkFx = fixture("network.json");

function sessionWith(routes: Parameters<typeof fakeFetch>[0]) {
  const { fetch, calls } = fakeFetch(routes);
  const session = new StudioSession(new ServiceClient("", fetch));
  return { session, calls };
}

describe("session state", () => {
  it("loads the scenario and hash from the service", async () => {
    const { session } = sessionWith([
      { method: "GET", path: "/scenario", body: scenarioFx },
    ]);
    await session.loadFromService();
    expect(session.serverHash).toBe(scenarioFx.scenario_hash);
    expect(session.scenario.boundary.rect[2]).toBe(500);
    expect(session.localEdits).toBe(false);
  });

  it("marks views stale on local edits and fresh after commit", async () => {
    const { session } = sessionWith([
      { method: "GET", path: "/scenario", body: scenarioFx },
      { method: "POST", path: "/generate?stage=network", body: networkFx },
      { method: "PUT", path: "/scenario", body: { scenario_hash: "feedc0de" } },
    ]);
    await session.loadFromService();
    await session.regenerate("network");
    expect(session.isStale("network")).toBe(false);

    session.applyDelta({ field: { theta: 0.5 } });
    expect(session.isStale("network")).toBe(true);
    expect(session.scenario.field.theta).toBe(0.5);
    expect(session.scenario.field.magnitude).toBe(scenarioFx.scenario.field.magnitude);

    await session.commit();
    expect(session.localEdits).toBe(false);
    // the view still carries the old hash, so it stays flagged
    expect(session.isStale("network")).toBe(true);
  });

  it("two regenerations without edits return the identical payload", async () => {
    const { session } = sessionWith([
      { method: "POST", path: "/generate?stage=network", body: networkFx },
    ]);
    const a = await session.regenerate("network");
    const b = await session.regenerate("network");
    expect(a.scenarioHash).toBe(b.scenarioHash);
    expect(JSON.stringify(a.payload)).toBe(JSON.stringify(b.payload));
  });

  it("keeps the last good view and names the failing stage", async () => {
    const { session } = sessionWith([
      { method: "POST", path: "/generate?stage=network", body: networkFx },
      {
        method: "POST",
        path: "/generate?stage=parcels",
        status: 500,
        body: { detail: { stage: "parcels", error: "street corridors cover the entire boundary" } },
      },
    ]);
    await session.regenerate("network");
    await expect(session.regenerate("parcels")).rejects.toThrow(ServiceError);
    expect(session.lastFailure?.stage).toBe("parcels");
    expect(session.lastFailure?.lastGood).toBe("network");
    expect(session.views.get("network")).toBeDefined();
  });

  it("surfaces scenario validation errors", async () => {
    const { session } = sessionWith([
      {
        method: "PUT",
        path: "/scenario",
        status: 400,
        body: { detail: { errors: ["scenario/boundary: required"] } },
      },
    ]);
    session.applyDelta({ boundary: null });
    let caught: ServiceError | null = null;
    try {
      await session.commit();
    } catch (err) {
      caught = err as ServiceError;
    }
    expect(caught?.validationErrors).toEqual(["scenario/boundary: required"]);
  });
});
