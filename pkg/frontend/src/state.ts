/**
 * View state for the review client and its pure transitions.
 *
 * Every user interaction is modeled as a pure function (old state, input) ->
 * new state so that a logged session can be replayed deterministically and
 * the controller stays a thin I/O shell around these transitions.
 */

export type Axis = "z" | "y" | "x";

export type LayerName = "ct" | "gt" | "pred" | "unc";

export interface LayerToggles {
  ct: boolean;
  gt: boolean;
  pred: boolean;
  unc: boolean;
}

/** Server-declared budget slider grid (percent of volume). */
export interface BudgetGrid {
  v1: number;
  v2: number;
  step: number;
}

/** Subset of GET /api/cases/{id}/meta the client relies on. */
export interface CaseMeta {
  case_id: string;
  dims: [number, number, number]; // (z, y, x)
  spacing_mm: [number, number, number];
  has_ct: boolean;
  methods: string[];
  budget_grid: BudgetGrid;
}

export interface ViewState {
  caseId: string;
  methodId: string;
  axis: Axis;
  sliceIndex: number;
  /** Percent of volume flagged, snapped to the server grid. */
  budgetPercent: number;
  layers: LayerToggles;
  /** Second method for side-by-side comparison, or null for a single pane. */
  comparisonMethod: string | null;
}

const AXIS_DIM: Record<Axis, number> = { z: 0, y: 1, x: 2 };

export function axisLength(meta: CaseMeta, axis: Axis): number {
  return meta.dims[AXIS_DIM[axis]] ?? 1;
}

export function midSlice(meta: CaseMeta, axis: Axis): number {
  return Math.floor(axisLength(meta, axis) / 2);
}

function clampSlice(meta: CaseMeta, axis: Axis, index: number): number {
  return Math.min(Math.max(index, 0), axisLength(meta, axis) - 1);
}

/**
 * Snap a raw slider value onto the server's budget grid. Grid positions are
 * counted in integer steps from v1 to avoid float drift along the slider.
 */
export function snapBudget(grid: BudgetGrid, value: number): number {
  const steps = Math.round((value - grid.v1) / grid.step);
  const maxSteps = Math.round((grid.v2 - grid.v1) / grid.step);
  const k = Math.min(Math.max(steps, 0), maxSteps);
  // one decimal per 0.1 step keeps URLs like budget=1.5 stable
  return Number((grid.v1 + k * grid.step).toFixed(6));
}

export function initialState(meta: CaseMeta): ViewState {
  return {
    caseId: meta.case_id,
    methodId: meta.methods[0] ?? "",
    axis: "z",
    sliceIndex: midSlice(meta, "z"),
    budgetPercent: snapBudget(meta.budget_grid, meta.budget_grid.v1),
    layers: { ct: meta.has_ct, gt: true, pred: true, unc: true },
    comparisonMethod: null,
  };
}

export function setBudget(state: ViewState, meta: CaseMeta, value: number): ViewState {
  return { ...state, budgetPercent: snapBudget(meta.budget_grid, value) };
}

export function setSlice(state: ViewState, meta: CaseMeta, index: number): ViewState {
  const clamped = clampSlice(meta, state.axis, index);
  if (clamped === state.sliceIndex) return state;
  return { ...state, sliceIndex: clamped };
}

export function stepSlice(state: ViewState, meta: CaseMeta, delta: number): ViewState {
  return setSlice(state, meta, state.sliceIndex + delta);
}

export function setAxis(state: ViewState, meta: CaseMeta, axis: Axis): ViewState {
  if (axis === state.axis) return state;
  return { ...state, axis, sliceIndex: midSlice(meta, axis) };
}

export function toggleLayer(state: ViewState, layer: LayerName): ViewState {
  return { ...state, layers: { ...state.layers, [layer]: !state.layers[layer] } };
}

export function setMethod(state: ViewState, meta: CaseMeta, methodId: string): ViewState {
  if (!meta.methods.includes(methodId)) {
    throw new Error(`method ${methodId} not available for case ${meta.case_id}`);
  }
  return { ...state, methodId };
}

/**
 * Enter/leave side-by-side comparison. At most two methods are ever shown:
 * the primary and one comparison method.
 */
export function setComparison(
  state: ViewState,
  meta: CaseMeta,
  methodId: string | null,
): ViewState {
  if (methodId !== null && !meta.methods.includes(methodId)) {
    throw new Error(`method ${methodId} not available for case ${meta.case_id}`);
  }
  return { ...state, comparisonMethod: methodId };
}

/** Switching cases keeps axis/budget/layers but recenters the slice. */
export function selectCase(state: ViewState, meta: CaseMeta): ViewState {
  const methodId = meta.methods.includes(state.methodId)
    ? state.methodId
    : (meta.methods[0] ?? "");
  const comparisonMethod =
    state.comparisonMethod !== null && meta.methods.includes(state.comparisonMethod)
      ? state.comparisonMethod
      : null;
  return {
    ...state,
    caseId: meta.case_id,
    methodId,
    comparisonMethod,
    sliceIndex: midSlice(meta, state.axis),
    budgetPercent: snapBudget(meta.budget_grid, state.budgetPercent),
  };
}

/** Enabled layer names in the fixed order the server expects. */
export function enabledLayers(state: ViewState): LayerName[] {
  return (["ct", "gt", "pred", "unc"] as const).filter((l) => state.layers[l]);
}
