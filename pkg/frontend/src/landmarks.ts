/** Landmark file export/import.
 *
 * The file format is exactly what the `roadforge calibrate` CLI consumes:
 * a reference lat/lon plus named pixel/world correspondences, with world
 * positions given as lat/lon/alt. Exports carry a schema tag so stale or
 * foreign files are rejected on import.
 */

import { GeoRef, LatLon, latLonToPixel, pixelToLatLon } from "./georef.js";
import { Pair, SessionState, completePairs, createSession } from "./state.js";

export const LANDMARKS_SCHEMA = "roadforge-landmarks/1";

export interface LandmarkRecord {
  name: string;
  pixel: [number, number];
  world: { lat: number; lon: number; alt: number };
}

export interface LandmarkFile {
  schema: string;
  reference: LatLon;
  landmarks: LandmarkRecord[];
}

export function buildLandmarkFile(
  state: SessionState,
  georef: GeoRef
): LandmarkFile {
  const landmarks = completePairs(state).map((p: Pair) => {
    const ll = pixelToLatLon(georef, p.satellitePixel as [number, number]);
    return {
      name: p.name,
      pixel: p.cameraPixel,
      world: { lat: ll.lat, lon: ll.lon, alt: 0.0 },
    };
  });
  return {
    schema: LANDMARKS_SCHEMA,
    reference: { lat: georef.a.latlon.lat, lon: georef.a.latlon.lon },
    landmarks,
  };
}

export function exportLandmarks(state: SessionState, georef: GeoRef): string {
  return JSON.stringify(buildLandmarkFile(state, georef), null, 2) + "\n";
}

export function importLandmarks(text: string, georef: GeoRef): SessionState {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch {
    throw new Error("not a JSON file");
  }
  const file = doc as Partial<LandmarkFile>;
  if (file.schema !== undefined && file.schema !== LANDMARKS_SCHEMA) {
    throw new Error(`unknown schema version: ${file.schema}`);
  }
  if (!Array.isArray(file.landmarks)) {
    throw new Error("missing landmarks list");
  }
  let state = createSession();
  const pairs: Pair[] = file.landmarks.map((lm, i) => {
    if (!Array.isArray(lm.pixel) || lm.pixel.length !== 2) {
      throw new Error(`landmark ${i}: bad pixel`);
    }
    const world = lm.world;
    if (
      !world ||
      typeof world.lat !== "number" ||
      typeof world.lon !== "number"
    ) {
      throw new Error(`landmark ${i}: bad world position`);
    }
    return {
      id: i + 1,
      name: typeof lm.name === "string" ? lm.name : `P${i + 1}`,
      cameraPixel: [lm.pixel[0], lm.pixel[1]],
      satellitePixel: latLonToPixel(georef, { lat: world.lat, lon: world.lon }),
    };
  });
  state = { ...state, pairs, nextId: pairs.length + 1 };
  return state;
}
