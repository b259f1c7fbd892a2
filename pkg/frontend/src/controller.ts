/**
 * Session controller: the only place where view-state transitions meet the
 * network. Guarantees per interaction:
 *
 *  - a settled budget-slider change issues exactly one slice fetch per
 *    visible pane and exactly one `budget_set` log POST;
 *  - every navigation (slice, axis, case, method, layer change) is logged as
 *    one `slice_viewed` event;
 *  - identical consecutive image URLs are de-duplicated, so dragging the
 *    slider across the same grid value never re-requests the same image;
 *  - network failures surface through the error banner and stay retryable.
 */

import { ApiClient, type BudgetCurve, type ReviewEvent } from "./api.js";
import {
  type Axis,
  type CaseMeta,
  type LayerName,
  type ViewState,
  initialState,
  selectCase,
  setAxis,
  setBudget,
  setComparison,
  setMethod,
  setSlice,
  stepSlice,
  toggleLayer,
} from "./state.js";

export type Pane = "primary" | "comparison";

export interface MetricsPanel {
  budget: number;
  ueo: number;
  covFp: number;
  covFn: number;
}

export interface ControllerHooks {
  /** A pane received a fresh slice image. */
  onImage?: (pane: Pane, url: string, image: Blob) => void;
  /** UEO/coverage at the nearest served point budget. */
  onMetrics?: (panel: MetricsPanel) => void;
  /** Retryable error banner; null clears it. */
  onError?: (message: string | null, retry: (() => Promise<void>) | null) => void;
  onState?: (state: ViewState) => void;
}

/** Full view snapshot embedded in every log event so sessions replay exactly. */
export function viewSnapshot(state: ViewState): Record<string, unknown> {
  return {
    case_id: state.caseId,
    method_id: state.methodId,
    axis: state.axis,
    slice_index: state.sliceIndex,
    budget_percent: state.budgetPercent,
    layers: { ...state.layers },
    comparison_method: state.comparisonMethod,
  };
}

export class ReviewController {
  private state!: ViewState;
  private meta!: CaseMeta;
  private readonly lastUrl = new Map<Pane, string>();
  private readonly curveCache = new Map<string, BudgetCurve>();

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly hooks: ControllerHooks = {},
  ) {}

  get view(): ViewState {
    return this.state;
  }

  get caseMeta(): CaseMeta {
    return this.meta;
  }

  async start(caseId?: string): Promise<void> {
    const cases = await this.api.listCases();
    const first = caseId ?? cases[0]?.case_id;
    if (first === undefined) throw new Error("service reports no cases");
    this.meta = await this.api.caseMeta(first);
    this.state = initialState(this.meta);
    this.hooks.onState?.(this.state);
    await this.logEvent("slice_viewed");
    await this.refreshPanes();
    await this.refreshMetrics();
  }

  /**
   * Settled slider value. A drag that lands on the value already shown is a
   * no-op (no fetch, no POST); otherwise exactly one POST plus one fetch per
   * visible pane.
   */
  async budgetSliderChange(value: number): Promise<void> {
    const next = setBudget(this.state, this.meta, value);
    if (next.budgetPercent === this.state.budgetPercent) return;
    this.state = next;
    this.hooks.onState?.(this.state);
    await this.logEvent("budget_set");
    await this.refreshPanes();
    await this.refreshMetrics();
  }

  async navigateSlice(index: number): Promise<void> {
    await this.applyNavigation(setSlice(this.state, this.meta, index));
  }

  async keyboardStep(key: string): Promise<void> {
    if (key === "ArrowUp") await this.applyNavigation(stepSlice(this.state, this.meta, 1));
    else if (key === "ArrowDown")
      await this.applyNavigation(stepSlice(this.state, this.meta, -1));
  }

  async changeAxis(axis: Axis): Promise<void> {
    await this.applyNavigation(setAxis(this.state, this.meta, axis));
  }

  async changeMethod(methodId: string): Promise<void> {
    await this.applyNavigation(setMethod(this.state, this.meta, methodId));
  }

  async changeComparison(methodId: string | null): Promise<void> {
    if (methodId === this.state.comparisonMethod) return;
    const next = setComparison(this.state, this.meta, methodId);
    if (next.comparisonMethod === null) this.lastUrl.delete("comparison");
    await this.applyNavigation(next);
  }

  async changeLayer(layer: LayerName): Promise<void> {
    await this.applyNavigation(toggleLayer(this.state, layer));
  }

  async changeCase(caseId: string): Promise<void> {
    if (caseId === this.state.caseId) return;
    this.meta = await this.api.caseMeta(caseId);
    await this.applyNavigation(selectCase(this.state, this.meta));
  }

  /** Free-form reviewer annotation on the current slice. */
  async markRegion(bbox: [number, number, number, number]): Promise<void> {
    await this.logEvent("region_marked", { bbox });
  }

  private async applyNavigation(next: ViewState): Promise<void> {
    if (next === this.state) return;
    this.state = next;
    this.hooks.onState?.(this.state);
    await this.logEvent("slice_viewed");
    await this.refreshPanes();
    await this.refreshMetrics();
  }

  private async refreshPanes(): Promise<void> {
    await this.fetchPane("primary", this.api.sliceUrl(this.state));
    if (this.state.comparisonMethod !== null) {
      await this.fetchPane(
        "comparison",
        this.api.sliceUrl(this.state, this.state.comparisonMethod),
      );
    }
  }

  private async fetchPane(pane: Pane, url: string): Promise<void> {
    if (this.lastUrl.get(pane) === url) return; // drag de-duplication
    this.lastUrl.set(pane, url);
    try {
      const image = await this.api.fetchSlice(url);
      this.hooks.onImage?.(pane, url, image);
      this.hooks.onError?.(null, null);
    } catch (err) {
      this.lastUrl.delete(pane); // allow the retry to re-request
      this.hooks.onError?.(
        `failed to load slice image: ${String(err)}`,
        () => this.fetchPane(pane, url),
      );
    }
  }

  private async refreshMetrics(): Promise<void> {
    const key = `${this.state.caseId}::${this.state.methodId}`;
    let curve = this.curveCache.get(key);
    if (curve === undefined) {
      try {
        curve = await this.api.budgetCurve(this.state.caseId, this.state.methodId);
      } catch (err) {
        this.hooks.onError?.(
          `failed to load budget curve: ${String(err)}`,
          () => this.refreshMetrics(),
        );
        return;
      }
      this.curveCache.set(key, curve);
    }
    // nearest served point budget; the client never recomputes curve values
    let best = 0;
    for (let i = 1; i < curve.budgets.length; i += 1) {
      const bi = curve.budgets[i] ?? 0;
      const bb = curve.budgets[best] ?? 0;
      if (Math.abs(bi - this.state.budgetPercent) < Math.abs(bb - this.state.budgetPercent)) {
        best = i;
      }
    }
    this.hooks.onMetrics?.({
      budget: curve.budgets[best] ?? 0,
      ueo: curve.ueo[best] ?? 0,
      covFp: curve.cov_fp[best] ?? 0,
      covFn: curve.cov_fn[best] ?? 0,
    });
  }

  private async logEvent(
    kind: ReviewEvent["event_kind"],
    extra: Record<string, unknown> = {},
  ): Promise<void> {
    const event: ReviewEvent = {
      session_id: this.sessionId,
      event_kind: kind,
      view: viewSnapshot(this.state),
      ...extra,
    };
    try {
      await this.api.postReviewEvent(this.state.caseId, event);
    } catch (err) {
      this.hooks.onError?.(
        `failed to log review event: ${String(err)}`,
        () => this.api.postReviewEvent(this.state.caseId, event),
      );
    }
  }
}
