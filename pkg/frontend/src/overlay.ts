/** Pure view-model helpers for the camera-panel overlay and status banner.
 *
 * Every number shown comes verbatim from the solve response; the UI does no
 * geometry of its own. Per-landmark error is drawn as a ring of that radius
 * around the clicked point (the response carries magnitudes, not directions).
 */

import { MIN_PAIRS, SessionState, completePairs } from "./state.js";

export interface ErrorMarker {
  id: number;
  name: string;
  pixel: [number, number];
  /** Reprojection error in pixels, or null if the point fell behind the camera. */
  radius: number | null;
}

export function errorMarkers(state: SessionState): ErrorMarker[] {
  const pairs = completePairs(state);
  const solve = state.lastSolve;
  return pairs.map((p, i) => ({
    id: p.id,
    name: p.name,
    pixel: p.cameraPixel,
    radius: solve && i < solve.errors.length ? solve.errors[i] : null,
  }));
}

export function banner(
  state: SessionState,
  lastError: { code: string; message: string } | null
): string | null {
  const n = completePairs(state).length;
  if (n < MIN_PAIRS) {
    return `need >=${MIN_PAIRS} correspondences (${n} so far)`;
  }
  if (lastError !== null) {
    return `${lastError.code}: ${lastError.message}`;
  }
  return null;
}

export function rmsLabel(state: SessionState): string {
  if (state.lastSolve === null) return "RMS: --";
  return `RMS: ${state.lastSolve.rms.toFixed(3)} px`;
}
