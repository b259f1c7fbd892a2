/**
 * Browser wiring: builds the review page against a running service
 * (`voxelqa serve <bundle> --root <data>`) and forwards DOM events to the
 * controller. All logic lives in state.ts/controller.ts; this file only
 * touches the DOM.
 */

import { ApiClient } from "./api.js";
import { ReviewController, type Pane } from "./controller.js";
import type { LayerName, ViewState } from "./state.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

export async function mount(root: HTMLElement, baseUrl = ""): Promise<ReviewController> {
  const api = new ApiClient(baseUrl);
  const sessionId = `s-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;

  const banner = el("div", { class: "banner", hidden: "" });
  const caseSelect = el("select", { class: "case" });
  const methodSelect = el("select", { class: "method" });
  const comparisonSelect = el("select", { class: "comparison" });
  const slider = el("input", {
    type: "range",
    class: "budget",
    min: "0",
    max: "5",
    step: "0.1",
    value: "0",
  });
  const budgetLabel = el("span", {}, "b = 0%");
  const sliceLabel = el("span", {}, "");
  const metricsPanel = el("div", { class: "metrics" });
  const panes: Record<Pane, HTMLImageElement> = {
    primary: el("img", { class: "pane primary", alt: "primary view" }),
    comparison: el("img", { class: "pane comparison", alt: "comparison view", hidden: "" }),
  };
  const layerBoxes = new Map<LayerName, HTMLInputElement>();
  const layersRow = el("div", { class: "layers" });
  for (const layer of ["ct", "gt", "pred", "unc"] as const) {
    const box = el("input", { type: "checkbox", id: `layer-${layer}` });
    layersRow.append(box, el("label", { for: `layer-${layer}` }, layer));
    layerBoxes.set(layer, box);
  }

  const syncControls = (state: ViewState) => {
    slider.value = String(state.budgetPercent);
    budgetLabel.textContent = `b = ${state.budgetPercent}%`;
    sliceLabel.textContent = `${state.axis}=${state.sliceIndex}`;
    caseSelect.value = state.caseId;
    methodSelect.value = state.methodId;
    comparisonSelect.value = state.comparisonMethod ?? "";
    panes.comparison.hidden = state.comparisonMethod === null;
    for (const [layer, box] of layerBoxes) box.checked = state.layers[layer];
  };

  const controller = new ReviewController(api, sessionId, {
    onState: syncControls,
    onImage: (pane, _url, image) => {
      const old = panes[pane].src;
      panes[pane].src = URL.createObjectURL(image);
      if (old.startsWith("blob:")) URL.revokeObjectURL(old);
    },
    onMetrics: (m) => {
      metricsPanel.textContent =
        `@b=${m.budget}%  UEO ${m.ueo.toFixed(3)}  ` +
        `FP coverage ${m.covFp.toFixed(3)}  FN coverage ${m.covFn.toFixed(3)}`;
    },
    onError: (message, retry) => {
      banner.hidden = message === null;
      banner.textContent = "";
      if (message !== null) {
        banner.append(el("span", {}, message));
        if (retry) {
          const btn = el("button", {}, "retry");
          btn.addEventListener("click", () => void retry());
          banner.append(btn);
        }
      }
    },
  });

  const cases = await api.listCases();
  for (const c of cases) caseSelect.append(el("option", { value: c.case_id }, c.case_id));

  await controller.start();
  const meta = controller.caseMeta;
  slider.min = String(meta.budget_grid.v1);
  slider.max = String(meta.budget_grid.v2);
  slider.step = String(meta.budget_grid.step);
  const fillMethods = () => {
    methodSelect.replaceChildren();
    comparisonSelect.replaceChildren(el("option", { value: "" }, "no comparison"));
    for (const m of controller.caseMeta.methods) {
      methodSelect.append(el("option", { value: m }, m));
      comparisonSelect.append(el("option", { value: m }, m));
    }
  };
  fillMethods();
  syncControls(controller.view);

  slider.addEventListener("change", () => void controller.budgetSliderChange(Number(slider.value)));
  caseSelect.addEventListener("change", () =>
    void controller.changeCase(caseSelect.value).then(fillMethods),
  );
  methodSelect.addEventListener("change", () => void controller.changeMethod(methodSelect.value));
  comparisonSelect.addEventListener("change", () =>
    void controller.changeComparison(comparisonSelect.value || null),
  );
  for (const [layer, box] of layerBoxes) {
    box.addEventListener("change", () => void controller.changeLayer(layer));
  }
  document.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowUp" || ev.key === "ArrowDown") {
      ev.preventDefault();
      void controller.keyboardStep(ev.key);
    }
  });

  root.append(
    banner,
    el("div", { class: "toolbar" }),
  );
  const toolbar = root.querySelector(".toolbar")!;
  toolbar.append(caseSelect, methodSelect, comparisonSelect, layersRow, slider, budgetLabel, sliceLabel);
  root.append(panes.primary, panes.comparison, metricsPanel);
  return controller;
}

declare global {
  interface Window {
    voxelqaMount: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.voxelqaMount = mount;
}
