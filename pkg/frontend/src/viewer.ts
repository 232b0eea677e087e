// Viewer state and DOM wiring: a pannable/zoomable SVG choropleth whose
// shading is re-derived from the bundled p-values whenever the threshold,
// variable, mode, or magnitude break changes.  The bundle itself is never
// mutated; every control is derived state and resettable.

import type { AreaRecord, Bundle, GeoFeature, Ring } from "./bundle.js";
import { albersProjector } from "./projection.js";
import { fillFor, type RenderMode, type ShadingParams } from "./shading.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ViewerState {
  variable: string;
  mode: RenderMode;
  alpha: number; // two-sided significance threshold, 0.001 .. 0.20
  magnitudeBreak: number;
  viewport: { x: number; y: number; w: number; h: number };
  hovered: string | null;
}

interface ProjectedArea {
  geoid: string;
  path: string;
}

export const ALPHA_MIN = 0.001;
export const ALPHA_MAX = 0.2;

export class Viewer {
  readonly bundle: Bundle;
  state: ViewerState;
  private readonly areasByGeoid = new Map<string, AreaRecord>();
  private readonly paths = new Map<string, SVGPathElement>();
  private readonly projected: ProjectedArea[] = [];
  private readonly homeViewport: { x: number; y: number; w: number; h: number };
  private readonly svg: SVGSVGElement;
  private readonly tooltip: HTMLElement;

  constructor(bundle: Bundle, mapHost: HTMLElement, tooltip: HTMLElement) {
    this.bundle = bundle;
    this.tooltip = tooltip;
    for (const area of bundle.areas) {
      this.areasByGeoid.set(area.geoid, area);
    }
    const variable = bundle.variables.includes("vacancy") ? "vacancy" : bundle.variables[0];
    const project = albersProjector(bundle.map_defaults.projection);

    let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
    const raw: { geoid: string; polys: [number, number][][][] }[] = [];
    for (const feature of bundle.geometry.features) {
      const polys = featurePolys(feature).map((poly) =>
        poly.map((ring) =>
          ring.map(([lon, lat]) => {
            const [x, y] = project(lon, lat);
            if (x < minX) minX = x;
            if (x > maxX) maxX = x;
            if (y < minY) minY = y;
            if (y > maxY) maxY = y;
            return [x, y] as [number, number];
          }),
        ),
      );
      raw.push({ geoid: feature.properties.GEOID, polys });
    }
    // normalize into a 1000-wide box, y flipped to screen orientation
    const scale = 1000 / Math.max(maxX - minX, 1e-12);
    const height = (maxY - minY) * scale;
    for (const { geoid, polys } of raw) {
      const parts: string[] = [];
      for (const poly of polys) {
        for (const ring of poly) {
          ring.forEach(([x, y], i) => {
            const px = (x - minX) * scale;
            const py = (maxY - y) * scale;
            parts.push(`${i === 0 ? "M" : "L"}${px.toFixed(2)} ${py.toFixed(2)}`);
          });
          parts.push("Z");
        }
      }
      this.projected.push({ geoid, path: parts.join("") });
    }
    this.projected.sort((a, b) => (a.geoid < b.geoid ? -1 : a.geoid > b.geoid ? 1 : 0));

    const pad = 20;
    this.homeViewport = { x: -pad, y: -pad, w: 1000 + 2 * pad, h: height + 2 * pad };
    this.state = {
      variable,
      mode: (bundle.map_defaults.mode as RenderMode) || "combined",
      alpha: 0.1,
      magnitudeBreak: bundle.map_defaults.magnitude_break[variable] ?? 0.02,
      viewport: { ...this.homeViewport },
      hovered: null,
    };

    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("id", "map");
    const group = document.createElementNS(SVG_NS, "g");
    group.setAttribute("stroke", "#777777");
    group.setAttribute("stroke-width", "0.6");
    group.setAttribute("fill-rule", "evenodd");
    for (const { geoid, path } of this.projected) {
      const el = document.createElementNS(SVG_NS, "path");
      el.setAttribute("d", path);
      el.dataset.geoid = geoid;
      el.addEventListener("mouseenter", (ev) => this.hover(geoid, ev));
      el.addEventListener("mousemove", (ev) => this.moveTooltip(ev));
      el.addEventListener("mouseleave", () => this.hover(null));
      group.appendChild(el);
      this.paths.set(geoid, el);
    }
    this.svg.appendChild(group);
    mapHost.appendChild(this.svg);
    this.applyViewport();
    this.reshade();
    this.wirePanZoom(mapHost);
  }

  shadingParams(): ShadingParams {
    const ladder = this.bundle.map_defaults.saturation_ladder;
    return {
      mode: this.state.mode,
      alpha: this.state.alpha,
      magnitudeBreak: this.state.magnitudeBreak,
      ladder: [ladder["At1Pct"] ?? 1.0, ladder["At5Pct"] ?? 0.65, ladder["At10Pct"] ?? 0.35],
      noTestFill: this.bundle.map_defaults.no_test_fill,
      notSignificantFill: this.bundle.map_defaults.not_significant_fill,
    };
  }

  /** Re-derive every area fill from the bundled values; no recomputation of
   * estimates, only the classification changes. */
  reshade(): void {
    const params = this.shadingParams();
    for (const [geoid, el] of this.paths) {
      const area = this.areasByGeoid.get(geoid);
      const value = area?.values[this.state.variable];
      el.setAttribute(
        "fill",
        value ? fillFor(value, params) : params.noTestFill,
      );
    }
    document.dispatchEvent(new CustomEvent("svydiff:reshade"));
  }

  setVariable(variable: string): void {
    this.state.variable = variable;
    this.state.magnitudeBreak = this.bundle.map_defaults.magnitude_break[variable] ?? this.state.magnitudeBreak;
    this.reshade();
  }

  setMode(mode: RenderMode): void {
    this.state.mode = mode;
    this.reshade();
  }

  setThreshold(alpha: number): void {
    this.state.alpha = Math.min(ALPHA_MAX, Math.max(ALPHA_MIN, alpha));
    this.reshade();
  }

  setMagnitudeBreak(value: number): void {
    if (value > 0) {
      this.state.magnitudeBreak = value;
      this.reshade();
    }
  }

  shadedCount(): number {
    let n = 0;
    const params = this.shadingParams();
    for (const el of this.paths.values()) {
      const fill = el.getAttribute("fill");
      if (fill !== params.noTestFill && fill !== params.notSignificantFill) n += 1;
    }
    return n;
  }

  hover(geoid: string | null, ev?: MouseEvent): void {
    this.state.hovered = geoid;
    if (!geoid) {
      this.tooltip.hidden = true;
      return;
    }
    const area = this.areasByGeoid.get(geoid);
    if (!area) return;
    const value = area.values[this.state.variable];
    const rows: [string, string][] = [
      ["estimate", value.display.estimate],
      ["baseline", value.display.base],
      ["difference", value.display.diff],
      ["se", value.display.se],
      ["p (one-sided)", value.display.p],
      ["class", value.sig],
    ];
    this.tooltip.innerHTML =
      `<strong>${area.name}</strong> <span class="geoid">${area.geoid}</span>` +
      `<table>` +
      rows.map(([k, v]) => `<tr><td>${k}</td><td>${v === "" ? "&mdash;" : v}</td></tr>`).join("") +
      `</table>`;
    this.tooltip.hidden = false;
    if (ev) this.moveTooltip(ev);
  }

  private moveTooltip(ev: MouseEvent): void {
    this.tooltip.style.left = `${ev.clientX + 14}px`;
    this.tooltip.style.top = `${ev.clientY + 10}px`;
  }

  resetView(): void {
    this.state.viewport = { ...this.homeViewport };
    this.applyViewport();
  }

  private applyViewport(): void {
    const v = this.state.viewport;
    this.svg.setAttribute("viewBox", `${v.x} ${v.y} ${v.w} ${v.h}`);
  }

  private wirePanZoom(host: HTMLElement): void {
    let dragging = false;
    let last: [number, number] = [0, 0];
    host.addEventListener("mousedown", (ev) => {
      dragging = true;
      last = [ev.clientX, ev.clientY];
    });
    window.addEventListener("mouseup", () => {
      dragging = false;
    });
    window.addEventListener("mousemove", (ev) => {
      if (!dragging) return;
      const rect = this.svg.getBoundingClientRect();
      const v = this.state.viewport;
      v.x -= ((ev.clientX - last[0]) / rect.width) * v.w;
      v.y -= ((ev.clientY - last[1]) / rect.height) * v.h;
      last = [ev.clientX, ev.clientY];
      this.applyViewport();
    });
    host.addEventListener(
      "wheel",
      (ev) => {
        ev.preventDefault();
        const rect = this.svg.getBoundingClientRect();
        const v = this.state.viewport;
        const factor = ev.deltaY > 0 ? 1.2 : 1 / 1.2;
        const fx = (ev.clientX - rect.left) / rect.width;
        const fy = (ev.clientY - rect.top) / rect.height;
        const nw = v.w * factor;
        const nh = v.h * factor;
        v.x += (v.w - nw) * fx;
        v.y += (v.h - nh) * fy;
        v.w = nw;
        v.h = nh;
        this.applyViewport();
      },
      { passive: false },
    );
  }
}

function featurePolys(feature: GeoFeature): Ring[][] {
  if (feature.geometry.type === "Polygon") {
    return [feature.geometry.coordinates];
  }
  return feature.geometry.coordinates;
}
