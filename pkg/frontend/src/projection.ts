// Spherical Albers equal-area conic, matching the CLI's projection so the
// viewer's geometry lines up with the rendered SVGs.

import type { ProjectionParams } from "./bundle.js";

const RAD = Math.PI / 180;

export interface Projector {
  (lon: number, lat: number): [number, number];
}

export function albersProjector(params: ProjectionParams): Projector {
  const phi1 = params.lat1 * RAD;
  const phi2 = params.lat2 * RAD;
  const phi0 = params.lat0 * RAD;
  const n = 0.5 * (Math.sin(phi1) + Math.sin(phi2));
  const c = Math.cos(phi1) ** 2 + 2 * n * Math.sin(phi1);
  const rho0 = Math.sqrt(c - 2 * n * Math.sin(phi0)) / n;
  return (lon, lat) => {
    const rho = Math.sqrt(c - 2 * n * Math.sin(lat * RAD)) / n;
    const dlon = (((lon - params.lon0 + 180) % 360) + 360) % 360 - 180;
    const theta = n * dlon * RAD;
    return [rho * Math.sin(theta), rho0 - rho * Math.cos(theta)];
  };
}
