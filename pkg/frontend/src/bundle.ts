// Bundle schema: the single JSON file produced by `svydiff bundle`.
// The viewer treats it as read-only; everything on screen is derived state.

export type SigClassToken = "At1Pct" | "At5Pct" | "At10Pct" | "NotSignificant" | "NoTest";

export interface DisplayStrings {
  estimate: string;
  base: string;
  diff: string;
  se: string;
  p: string;
}

export interface AreaValue {
  estimate: number | null;
  base: number | null;
  diff: number | null;
  se: number | null;
  z: number | null;
  p: number | null;
  sig: SigClassToken;
  display: DisplayStrings;
}

export interface AreaRecord {
  geoid: string;
  name: string;
  values: Record<string, AreaValue>;
}

export interface ProjectionParams {
  lat1: number;
  lat2: number;
  lon0: number;
  lat0: number;
}

export interface MapDefaults {
  mode: string;
  magnitude_break: Record<string, number>;
  saturation_ladder: Record<string, number>;
  projection: ProjectionParams;
  no_test_fill: string;
  not_significant_fill: string;
}

export type Ring = [number, number][];

export interface GeoFeature {
  type: "Feature";
  properties: { GEOID: string; NAME: string };
  geometry:
    | { type: "Polygon"; coordinates: Ring[] }
    | { type: "MultiPolygon"; coordinates: Ring[][] };
}

export interface Bundle {
  schema: string;
  variables: string[];
  map_defaults: MapDefaults;
  diagnostics: Record<string, unknown>;
  areas: AreaRecord[];
  geometry: { type: "FeatureCollection"; features: GeoFeature[] };
}

export class BundleError extends Error {}

const SIG_TOKENS = new Set(["At1Pct", "At5Pct", "At10Pct", "NotSignificant", "NoTest"]);

export function validateBundle(doc: unknown): Bundle {
  if (typeof doc !== "object" || doc === null) {
    throw new BundleError("bundle is not a JSON object");
  }
  const b = doc as Record<string, unknown>;
  if (typeof b.schema !== "string" || !b.schema.startsWith("svydiff-bundle/")) {
    throw new BundleError(`unrecognized bundle schema: ${String(b.schema)}`);
  }
  if (!Array.isArray(b.variables) || b.variables.length === 0) {
    throw new BundleError("bundle lists no variables");
  }
  if (!Array.isArray(b.areas) || b.areas.length === 0) {
    throw new BundleError("bundle contains no areas");
  }
  const geometry = b.geometry as Bundle["geometry"] | undefined;
  if (!geometry || geometry.type !== "FeatureCollection" || !Array.isArray(geometry.features)) {
    throw new BundleError("bundle geometry is not a FeatureCollection");
  }
  const defaults = b.map_defaults as MapDefaults | undefined;
  if (!defaults || typeof defaults.projection !== "object") {
    throw new BundleError("bundle is missing map defaults");
  }
  for (const area of b.areas as AreaRecord[]) {
    if (typeof area.geoid !== "string" || typeof area.values !== "object") {
      throw new BundleError(`malformed area record: ${JSON.stringify(area).slice(0, 80)}`);
    }
    for (const variable of b.variables as string[]) {
      const value = area.values[variable];
      if (!value || !SIG_TOKENS.has(value.sig)) {
        throw new BundleError(`area ${area.geoid}: missing or malformed value for ${variable}`);
      }
      if (value.p !== null && (typeof value.p !== "number" || value.p < 0 || value.p > 1)) {
        throw new BundleError(`area ${area.geoid}: p out of range for ${variable}`);
      }
    }
  }
  return b as unknown as Bundle;
}
