// Pure shading rules: which areas are shaded at a given two-sided threshold,
// and with what fill.  Mirrors the CLI's hue/saturation coding; at the
// default threshold 0.10 the shaded set is identical to the CLI's combined
// map, because "two-sided significance <= alpha" and the 1%/5%/10% class
// edges coincide there.

import type { AreaValue } from "./bundle.js";

export type RenderMode = "difference" | "pvalue" | "combined";

export interface ShadingParams {
  mode: RenderMode;
  alpha: number; // two-sided significance threshold
  magnitudeBreak: number;
  ladder: [number, number, number]; // saturations at <=alpha/10, <=alpha/2, <=alpha
  noTestFill: string;
  notSignificantFill: string;
}

export const HUE_DEGREES = {
  largePositive: 220,
  smallPositive: 130,
  smallNegative: 30,
  largeNegative: 0,
} as const;

export function twoSidedSignificance(p: number): number {
  return 2 * Math.min(p, 1 - p);
}

export function isShaded(p: number | null, alpha: number): boolean {
  return p !== null && twoSidedSignificance(p) <= alpha;
}

/** Saturation from the ladder re-anchored to alpha: the 1%/5%/10% pattern
 * generalizes to alpha/10, alpha/2, alpha. */
export function saturationFor(p: number, params: ShadingParams): number {
  const s = twoSidedSignificance(p);
  if (s <= params.alpha / 10) return params.ladder[0];
  if (s <= params.alpha / 2) return params.ladder[1];
  return params.ladder[2];
}

export function hueFor(diff: number, magnitudeBreak: number): number {
  if (diff >= magnitudeBreak) return HUE_DEGREES.largePositive;
  if (diff >= 0) return HUE_DEGREES.smallPositive;
  if (diff > -magnitudeBreak) return HUE_DEGREES.smallNegative;
  return HUE_DEGREES.largeNegative;
}

export function hslHex(hueDegrees: number, saturation: number, lightness = 0.5): string {
  const h = ((hueDegrees % 360) + 360) % 360 / 360;
  const q = lightness < 0.5 ? lightness * (1 + saturation) : lightness + saturation - lightness * saturation;
  const p = 2 * lightness - q;
  const channel = (t: number): number => {
    let x = t;
    if (x < 0) x += 1;
    if (x > 1) x -= 1;
    if (x < 1 / 6) return p + (q - p) * 6 * x;
    if (x < 1 / 2) return q;
    if (x < 2 / 3) return p + (q - p) * (2 / 3 - x) * 6;
    return p;
  };
  const to255 = (v: number) => Math.round(v * 255).toString(16).padStart(2, "0");
  return `#${to255(channel(h + 1 / 3))}${to255(channel(h))}${to255(channel(h - 1 / 3))}`;
}

export function fillFor(value: AreaValue, params: ShadingParams): string {
  if (value.p === null || value.diff === null) {
    return params.noTestFill;
  }
  if (params.mode === "difference") {
    return hslHex(hueFor(value.diff, params.magnitudeBreak), 1.0);
  }
  if (!isShaded(value.p, params.alpha)) {
    return params.notSignificantFill;
  }
  const saturation = saturationFor(value.p, params);
  const hue =
    params.mode === "pvalue"
      ? value.diff >= 0
        ? HUE_DEGREES.largePositive
        : HUE_DEGREES.largeNegative
      : hueFor(value.diff, params.magnitudeBreak);
  return hslHex(hue, saturation);
}

export function shadedGeoids(
  areas: { geoid: string; values: Record<string, AreaValue> }[],
  variable: string,
  alpha: number,
): Set<string> {
  const out = new Set<string>();
  for (const area of areas) {
    const value = area.values[variable];
    if (value && isShaded(value.p, alpha)) {
      out.add(area.geoid);
    }
  }
  return out;
}
