/**
 * In-memory stand-in for the review service, faithful to its URL shapes and
 * payloads, with request counters so tests can assert exact request counts.
 */

import type { FetchLike } from "../src/api.js";

export interface MockService {
  fetch: FetchLike;
  sliceRequests: string[];
  logPosts: { caseId: string; body: Record<string, unknown> }[];
  curveRequests: string[];
  reviewLogJsonl: string;
  reset(): void;
}

const CASES: Record<string, string[]> = {
  case_000: ["plain", "de", "de+ts+tta"],
  case_001: ["plain", "de", "de+ts+tta"],
};

const DIMS: Record<string, [number, number, number]> = {
  case_000: [12, 24, 24],
  case_001: [20, 24, 24],
};

const BUDGETS = Array.from({ length: 51 }, (_, i) => Number((i * 0.1).toFixed(1)));

function json(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function mockService(): MockService {
  const sliceRequests: string[] = [];
  const logPosts: { caseId: string; body: Record<string, unknown> }[] = [];
  const curveRequests: string[] = [];
  const logLines: string[] = [];

  const fetchImpl: FetchLike = async (url, init) => {
    const u = new URL(url, "http://service.test");
    const path = u.pathname;

    if (path === "/api/cases") {
      return json(Object.entries(CASES).map(([case_id, methods]) => ({ case_id, methods })));
    }

    let m = path.match(/^\/api\/cases\/([^/]+)\/meta$/);
    if (m) {
      const caseId = m[1]!;
      if (!(caseId in CASES)) return json({ detail: "no such case" }, 404);
      return json({
        case_id: caseId,
        dims: DIMS[caseId],
        spacing_mm: [3.0, 1.0, 1.0],
        has_ct: true,
        methods: CASES[caseId],
        budget_grid: { v1: 0.0, v2: 5.0, step: 0.1 },
      });
    }

    m = path.match(/^\/api\/cases\/([^/]+)\/budget-curve$/);
    if (m) {
      curveRequests.push(url);
      return json({
        budgets: BUDGETS,
        ueo: BUDGETS.map((b) => b / 10),
        cov_fp: BUDGETS.map((b) => b / 5),
        cov_fn: BUDGETS.map((b) => b / 7),
        cov_defined: { fp: true, fn: true },
      });
    }

    m = path.match(/^\/api\/cases\/([^/]+)\/slice\/([zyx])\/(\d+)\.png$/);
    if (m) {
      sliceRequests.push(url);
      return new Response(new Blob([`png:${url}`]), {
        status: 200,
        headers: { "Content-Type": "image/png" },
      });
    }

    m = path.match(/^\/api\/review\/([^/]+)\/log$/);
    if (m && init?.method === "POST") {
      const body = JSON.parse(String(init.body)) as Record<string, unknown>;
      logPosts.push({ caseId: m[1]!, body });
      logLines.push(JSON.stringify(body));
      return json({ logged: true }, 201);
    }

    return json({ detail: `unexpected request ${url}` }, 500);
  };

  return {
    fetch: fetchImpl,
    sliceRequests,
    logPosts,
    curveRequests,
    get reviewLogJsonl() {
      return logLines.join("\n") + (logLines.length > 0 ? "\n" : "");
    },
    reset() {
      sliceRequests.length = 0;
      logPosts.length = 0;
      curveRequests.length = 0;
    },
  };
}
