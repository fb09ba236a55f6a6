// Shared fetch stub: records every request and serves canned JSON per route.

import { vi } from "vitest";

export interface RecordedRequest {
  method: string;
  url: string;
  body: unknown;
}

export interface FetchStub {
  requests: RecordedRequest[];
  respond(match: (method: string, url: string) => boolean, payload: unknown): void;
  fetcher: typeof fetch;
}

export function fetchStub(): FetchStub {
  const requests: RecordedRequest[] = [];
  const routes: Array<{ match: (m: string, u: string) => boolean; payload: unknown }> = [];
  const fetcher = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    requests.push({ method, url, body });
    for (const route of routes) {
      if (route.match(method, url)) {
        return new Response(JSON.stringify(route.payload), {
          status: 200,
          headers: { "Content-Type": "application/json" },
        });
      }
    }
    return new Response(JSON.stringify({ code: "not_found", message: `no stub for ${url}` }), {
      status: 404,
      headers: { "Content-Type": "application/json" },
    });
  }) as unknown as typeof fetch;
  return {
    requests,
    respond: (match, payload) => routes.push({ match, payload }),
    fetcher,
  };
}

export function sampleFilterReport(overrides: Record<string, unknown> = {}) {
  return {
    alpha_used: 0.63,
    removed_duplicates: ["img-b"],
    removed_outliers: ["img-c"],
    retention_achieved: 0.9,
    per_class_breakdown: {
      blaze: { kept: 9, removed_duplicates: 1, removed_outliers: 1, alpha: 0.63 },
      calm: { kept: 10, removed_duplicates: 0, removed_outliers: 0, alpha: 0.64 },
    },
    warnings: [],
    ...overrides,
  };
}

export const TABLE_GRAMMAR = {
  contexts: [
    { name: "category", options: ["small fire and smoke", "normal"], mandatory: true },
    { name: "location", options: ["tropical forest", "boreal forest"], mandatory: false },
    { name: "view", options: ["drone's view"], mandatory: false },
    { name: "time", options: ["morning"], mandatory: false },
  ],
};
