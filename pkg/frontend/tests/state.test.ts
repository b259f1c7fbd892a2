import { describe, expect, it } from "vitest";

import {
  type CaseMeta,
  enabledLayers,
  initialState,
  midSlice,
  selectCase,
  setAxis,
  setBudget,
  setComparison,
  setMethod,
  setSlice,
  snapBudget,
  stepSlice,
  toggleLayer,
} from "../src/state.js";

const meta: CaseMeta = {
  case_id: "case_000",
  dims: [12, 24, 24],
  spacing_mm: [3, 1, 1],
  has_ct: true,
  methods: ["plain", "de"],
  budget_grid: { v1: 0, v2: 5, step: 0.1 },
};

describe("budget snapping", () => {
  it("snaps arbitrary slider values to the server grid", () => {
    expect(snapBudget(meta.budget_grid, 0.97)).toBe(1);
    expect(snapBudget(meta.budget_grid, 1.04)).toBe(1);
    expect(snapBudget(meta.budget_grid, 2.5)).toBe(2.5);
  });

  it("clamps to the grid range", () => {
    expect(snapBudget(meta.budget_grid, -3)).toBe(0);
    expect(snapBudget(meta.budget_grid, 99)).toBe(5);
  });

  it("every grid point is a fixed point", () => {
    for (let k = 0; k <= 50; k += 1) {
      const b = Number((k * 0.1).toFixed(1));
      expect(snapBudget(meta.budget_grid, b)).toBe(b);
    }
  });
});

describe("view transitions", () => {
  it("starts at mid-volume on the z axis with all layers on", () => {
    const s = initialState(meta);
    expect(s.sliceIndex).toBe(6);
    expect(s.axis).toBe("z");
    expect(s.budgetPercent).toBe(0);
    expect(enabledLayers(s)).toEqual(["ct", "gt", "pred", "unc"]);
  });

  it("clamps slice navigation to the axis extent", () => {
    const s = initialState(meta);
    expect(setSlice(s, meta, 100).sliceIndex).toBe(11);
    expect(setSlice(s, meta, -4).sliceIndex).toBe(0);
  });

  it("steps slices by one and saturates at the ends", () => {
    let s = setSlice(initialState(meta), meta, 11);
    s = stepSlice(s, meta, 1);
    expect(s.sliceIndex).toBe(11);
    s = stepSlice(s, meta, -1);
    expect(s.sliceIndex).toBe(10);
  });

  it("axis change recenters the slice", () => {
    const s = setAxis(setSlice(initialState(meta), meta, 2), meta, "y");
    expect(s.axis).toBe("y");
    expect(s.sliceIndex).toBe(12);
  });

  it("toggling a layer flips only that layer", () => {
    const s = toggleLayer(initialState(meta), "gt");
    expect(s.layers).toEqual({ ct: true, gt: false, pred: true, unc: true });
    expect(enabledLayers(s)).toEqual(["ct", "pred", "unc"]);
  });

  it("rejects methods the case does not have", () => {
    expect(() => setMethod(initialState(meta), meta, "nope")).toThrow(/not available/);
    expect(() => setComparison(initialState(meta), meta, "nope")).toThrow(/not available/);
  });

  it("case switch resets the slice to mid-volume and keeps budget/layers", () => {
    const other: CaseMeta = { ...meta, case_id: "case_001", dims: [20, 24, 24] };
    let s = initialState(meta);
    s = setBudget(s, meta, 1.5);
    s = toggleLayer(s, "pred");
    s = setSlice(s, meta, 2);
    const switched = selectCase(s, other);
    expect(switched.caseId).toBe("case_001");
    expect(switched.sliceIndex).toBe(midSlice(other, "z"));
    expect(switched.sliceIndex).toBe(10);
    expect(switched.budgetPercent).toBe(1.5);
    expect(switched.layers.pred).toBe(false);
  });

  it("case switch drops a comparison method the new case lacks", () => {
    const other: CaseMeta = { ...meta, case_id: "case_001", methods: ["plain"] };
    const s = setComparison(initialState(meta), meta, "de");
    expect(selectCase(s, other).comparisonMethod).toBeNull();
    expect(selectCase(s, { ...other, methods: ["plain", "de"] }).comparisonMethod).toBe("de");
  });
});
