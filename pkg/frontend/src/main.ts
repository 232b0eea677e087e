// Bootstrap: fetch the bundle (default ./bundle.json, override with
// ?bundle=url), validate it, and wire the controls.  Failures of any kind
// land in a visible error panel rather than a blank page.

import { BundleError, validateBundle } from "./bundle.js";
import { legendHtml } from "./legend.js";
import { ALPHA_MAX, ALPHA_MIN, Viewer } from "./viewer.js";
import type { RenderMode } from "./shading.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(message: string): void {
  const panel = el<HTMLElement>("error-panel");
  panel.textContent = message;
  panel.hidden = false;
  el<HTMLElement>("app").hidden = true;
}

async function boot(): Promise<void> {
  const url = new URLSearchParams(window.location.search).get("bundle") ?? "bundle.json";
  let doc: unknown;
  try {
    const response = await fetch(url);
    if (!response.ok) {
      showError(`could not load ${url}: HTTP ${response.status}`);
      return;
    }
    doc = await response.json();
  } catch (err) {
    showError(`could not load ${url}: ${String(err)}`);
    return;
  }
  let bundle;
  try {
    bundle = validateBundle(doc);
  } catch (err) {
    showError(err instanceof BundleError ? `malformed bundle: ${err.message}` : String(err));
    return;
  }

  const viewer = new Viewer(bundle, el("map-host"), el("tooltip"));

  const variableSelect = el<HTMLSelectElement>("variable");
  for (const variable of bundle.variables) {
    const option = document.createElement("option");
    option.value = variable;
    option.textContent = variable;
    variableSelect.appendChild(option);
  }
  variableSelect.value = viewer.state.variable;

  const modeSelect = el<HTMLSelectElement>("mode");
  modeSelect.value = viewer.state.mode;
  const slider = el<HTMLInputElement>("threshold");
  slider.min = String(ALPHA_MIN);
  slider.max = String(ALPHA_MAX);
  slider.step = "0.001";
  slider.value = String(viewer.state.alpha);
  const thresholdLabel = el<HTMLElement>("threshold-value");
  const breakInput = el<HTMLInputElement>("magnitude-break");
  breakInput.value = String(viewer.state.magnitudeBreak);
  const legend = el<HTMLElement>("legend");
  const counts = el<HTMLElement>("counts");

  const refreshChrome = () => {
    thresholdLabel.textContent = viewer.state.alpha.toFixed(3);
    legend.innerHTML = legendHtml(viewer.shadingParams());
    counts.textContent = `${viewer.shadedCount()} of ${bundle.areas.length} areas shaded`;
    breakInput.disabled = viewer.state.mode === "pvalue";
  };

  variableSelect.addEventListener("change", () => {
    viewer.setVariable(variableSelect.value);
    breakInput.value = String(viewer.state.magnitudeBreak);
  });
  modeSelect.addEventListener("change", () => viewer.setMode(modeSelect.value as RenderMode));
  slider.addEventListener("input", () => viewer.setThreshold(Number(slider.value)));
  breakInput.addEventListener("change", () => viewer.setMagnitudeBreak(Number(breakInput.value)));
  el<HTMLButtonElement>("reset-view").addEventListener("click", () => viewer.resetView());
  document.addEventListener("svydiff:reshade", refreshChrome);
  refreshChrome();
}

boot();
