/**
 * Thin typed client for the review service HTTP API.
 *
 * All numbers shown in the UI come from these endpoints; the client never
 * computes metrics or thresholds itself. `fetch` is injectable so the suite
 * can count requests without a network.
 */

import type { CaseMeta, ViewState } from "./state.js";
import { enabledLayers } from "./state.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface CaseListing {
  case_id: string;
  methods: string[];
}

/** One row of the bundle's metrics.csv, as served per (case, method). */
export type MetricsRow = Record<string, string | number>;

export interface BudgetCurve {
  budgets: number[];
  ueo: number[];
  cov_fp: number[];
  cov_fn: number[];
  [key: string]: unknown;
}

export type EventKind = "budget_set" | "slice_viewed" | "region_marked";

export interface ReviewEvent {
  session_id: string;
  event_kind: EventKind;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    throw new ApiError(resp.status, `${resp.status} ${await resp.text()}`);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  async listCases(): Promise<CaseListing[]> {
    return asJson(await this.fetchImpl(`${this.baseUrl}/api/cases`));
  }

  async caseMeta(caseId: string): Promise<CaseMeta> {
    return asJson(
      await this.fetchImpl(`${this.baseUrl}/api/cases/${encodeURIComponent(caseId)}/meta`),
    );
  }

  async caseMetrics(caseId: string, methodId: string): Promise<MetricsRow> {
    const url =
      `${this.baseUrl}/api/cases/${encodeURIComponent(caseId)}/metrics` +
      `?method=${encodeURIComponent(methodId)}`;
    return asJson(await this.fetchImpl(url));
  }

  async budgetCurve(caseId: string, methodId: string): Promise<BudgetCurve> {
    const url =
      `${this.baseUrl}/api/cases/${encodeURIComponent(caseId)}/budget-curve` +
      `?method=${encodeURIComponent(methodId)}`;
    return asJson(await this.fetchImpl(url));
  }

  /** Deterministic slice-image URL for a view state (and optional pane method). */
  sliceUrl(state: ViewState, methodId: string = state.methodId): string {
    const params = new URLSearchParams({
      method: methodId,
      budget: String(state.budgetPercent),
      layers: enabledLayers(state).join(","),
    });
    return (
      `${this.baseUrl}/api/cases/${encodeURIComponent(state.caseId)}` +
      `/slice/${state.axis}/${state.sliceIndex}.png?${params.toString()}`
    );
  }

  async fetchSlice(url: string): Promise<Blob> {
    const resp = await this.fetchImpl(url);
    if (!resp.ok) {
      throw new ApiError(resp.status, `${resp.status} ${await resp.text()}`);
    }
    return resp.blob();
  }

  async postReviewEvent(caseId: string, event: ReviewEvent): Promise<void> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/api/review/${encodeURIComponent(caseId)}/log`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(event),
      },
    );
    if (!resp.ok) {
      throw new ApiError(resp.status, `${resp.status} ${await resp.text()}`);
    }
  }
}
