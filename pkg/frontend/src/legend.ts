// HTML legend mirroring the current shading parameters.

import { fillFor, hslHex, HUE_DEGREES, type ShadingParams } from "./shading.js";

function swatch(color: string): string {
  return `<span class="swatch" style="background:${color}"></span>`;
}

export function legendHtml(params: ShadingParams): string {
  const pct = (v: number) => `${(v * 100).toFixed(1).replace(/\.0$/, "")}%`;
  const levels: [string, number][] = [
    [pct(params.alpha / 10), params.ladder[0]],
    [pct(params.alpha / 2), params.ladder[1]],
    [pct(params.alpha), params.ladder[2]],
  ];
  const brk = params.magnitudeBreak;
  const rows: [number, string][] =
    params.mode === "pvalue"
      ? [
          [HUE_DEGREES.largePositive, "increase"],
          [HUE_DEGREES.largeNegative, "decrease"],
        ]
      : [
          [HUE_DEGREES.largePositive, `increase &ge; ${brk}`],
          [HUE_DEGREES.smallPositive, `increase &lt; ${brk}`],
          [HUE_DEGREES.smallNegative, `decrease &lt; ${brk}`],
          [HUE_DEGREES.largeNegative, `decrease &ge; ${brk}`],
        ];
  const parts: string[] = [];
  if (params.mode === "difference") {
    for (const [hue, label] of rows) {
      parts.push(`<div class="legend-row">${swatch(hslHex(hue, 1.0))}<span>${label}</span></div>`);
    }
  } else {
    parts.push(
      `<div class="legend-row legend-head"><span class="swatch-spacer"></span>` +
        levels.map(([label]) => `<span class="col">${label}</span>`).join("") +
        `<span>two-sided level</span></div>`,
    );
    for (const [hue, label] of rows) {
      parts.push(
        `<div class="legend-row">` +
          `<span class="swatch-spacer"></span>` +
          levels.map(([, s]) => swatch(hslHex(hue, s))).join("") +
          `<span>${label}</span></div>`,
      );
    }
    parts.push(
      `<div class="legend-row">${swatch(params.notSignificantFill)}<span>not significant (&gt; ${pct(params.alpha)})</span></div>`,
    );
  }
  parts.push(`<div class="legend-row">${swatch(params.noTestFill)}<span>no test</span></div>`);
  return parts.join("");
}

// re-export for the smoke check in tests
export { fillFor };
