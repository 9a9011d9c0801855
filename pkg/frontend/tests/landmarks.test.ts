import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { makeGeoRef } from "../src/georef.js";
import {
  LANDMARKS_SCHEMA,
  exportLandmarks,
  importLandmarks,
} from "../src/landmarks.js";
import { addPair, beginPair, createSession, renamePair } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const sessionInput = JSON.parse(
  readFileSync(join(here, "fixtures", "session-input.json"), "utf8")
);
const exportFixture = readFileSync(
  join(here, "fixtures", "landmarks-export.json"),
  "utf8"
);

function fixtureGeoRef() {
  return makeGeoRef(sessionInput.anchors.a, sessionInput.anchors.b);
}

function fixtureSession() {
  let s = createSession();
  for (const p of sessionInput.pairs) {
    s = addPair(s, p.cameraPixel, p.satellitePixel);
  }
  return s;
}

describe("export", () => {
  it("reproduces the shared contract fixture byte for byte", () => {
    // the same file is fed unmodified to the calibrate CLI by the
    // cross-component test on the Python side
    const out = exportLandmarks(fixtureSession(), fixtureGeoRef());
    expect(out).toBe(exportFixture);
  });

  it("skips incomplete pairs", () => {
    let s = fixtureSession();
    s = beginPair(s, [1, 2]); // no satellite side yet
    const doc = JSON.parse(exportLandmarks(s, fixtureGeoRef()));
    expect(doc.landmarks).toHaveLength(sessionInput.pairs.length);
  });

  it("uses renamed pair names", () => {
    let s = fixtureSession();
    s = renamePair(s, 1, "stop line");
    const doc = JSON.parse(exportLandmarks(s, fixtureGeoRef()));
    expect(doc.landmarks[0].name).toBe("stop line");
  });

  it("references anchor A's lat/lon", () => {
    const doc = JSON.parse(exportLandmarks(fixtureSession(), fixtureGeoRef()));
    expect(doc.reference).toEqual(sessionInput.anchors.a.latlon);
    expect(doc.schema).toBe(LANDMARKS_SCHEMA);
  });
});

describe("import", () => {
  it("export then import preserves all pairs", () => {
    const g = fixtureGeoRef();
    const original = fixtureSession();
    const restored = importLandmarks(exportLandmarks(original, g), g);
    expect(restored.pairs).toHaveLength(original.pairs.length);
    for (let i = 0; i < original.pairs.length; i++) {
      expect(restored.pairs[i].name).toBe(original.pairs[i].name);
      expect(restored.pairs[i].cameraPixel[0]).toBeCloseTo(
        original.pairs[i].cameraPixel[0],
        6
      );
      const sat = restored.pairs[i].satellitePixel as [number, number];
      const orig = original.pairs[i].satellitePixel as [number, number];
      expect(sat[0]).toBeCloseTo(orig[0], 5);
      expect(sat[1]).toBeCloseTo(orig[1], 5);
    }
  });

  it("rejects unknown schema versions with a message", () => {
    const doc = JSON.parse(exportFixture);
    doc.schema = "roadforge-landmarks/99";
    expect(() => importLandmarks(JSON.stringify(doc), fixtureGeoRef())).toThrow(
      /unknown schema/
    );
  });

  it("rejects non-JSON input", () => {
    expect(() => importLandmarks("not json", fixtureGeoRef())).toThrow(
      /JSON/
    );
  });

  it("rejects files without a landmarks list", () => {
    expect(() => importLandmarks("{}", fixtureGeoRef())).toThrow(/landmarks/);
  });

  it("accepts schema-less files in the CLI's plain format", () => {
    const doc = JSON.parse(exportFixture);
    delete doc.schema;
    const s = importLandmarks(JSON.stringify(doc), fixtureGeoRef());
    expect(s.pairs).toHaveLength(sessionInput.pairs.length);
  });
});
