/** Fixture-backed service doubles for the studio tests.
 *
 * Every payload here was recorded from the real generation service by
 * test/make_fixtures.py, so assertions against these bytes are assertions
 * against actual service behavior.
 */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";

const HERE = dirname(fileURLToPath(import.meta.url));

export function fixture<T = any>(name: string): T {
  return JSON.parse(readFileSync(join(HERE, "fixtures", name), "utf-8")) as T;
}

export function fixtureText(name: string): string {
  return readFileSync(join(HERE, "fixtures", name), "utf-8");
}

interface Route {
  method: string;
  path: string;
  status?: number;
  body: unknown;
  contentType?: string;
}

/** fetch stand-in resolving from an ordered route table; records calls. */
export function fakeFetch(routes: Route[]): { fetch: FetchLike; calls: string[] } {
  const calls: string[] = [];
  const impl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    calls.push(`${method} ${url}`);
    const route = routes.find((r) => r.method === method && url.endsWith(r.path));
    if (!route) {
      return new Response(JSON.stringify({ detail: `no route ${method} ${url}` }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    const ctype = route.contentType ?? "application/json";
    const payload =
      typeof route.body === "string" ? route.body : JSON.stringify(route.body);
    return new Response(payload, {
      status: route.status ?? 200,
      headers: { "content-type": ctype },
    });
  };
  return { fetch: impl, calls };
}
