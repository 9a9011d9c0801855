import { describe, expect, it } from "vitest";

import {
  Anchor,
  latLonToPixel,
  makeGeoRef,
  pixelToLatLon,
} from "../src/georef.js";

const a: Anchor = { pixel: [0, 0], latlon: { lat: 40.0005, lon: -105.0005 } };
const b: Anchor = {
  pixel: [800, 800],
  latlon: { lat: 39.9995, lon: -104.9995 },
};

describe("two-anchor georeferencing", () => {
  it("maps the anchors to themselves", () => {
    const g = makeGeoRef(a, b);
    expect(pixelToLatLon(g, a.pixel)).toEqual(a.latlon);
    expect(pixelToLatLon(g, b.pixel)).toEqual(b.latlon);
  });

  it("interpolates linearly between anchors", () => {
    const g = makeGeoRef(a, b);
    const mid = pixelToLatLon(g, [400, 400]);
    expect(mid.lat).toBeCloseTo(40.0, 12);
    expect(mid.lon).toBeCloseTo(-105.0, 12);
  });

  it("extrapolates beyond the anchors", () => {
    const g = makeGeoRef(a, b);
    const out = pixelToLatLon(g, [1600, 0]);
    expect(out.lon).toBeCloseTo(-104.9985, 12);
    expect(out.lat).toBeCloseTo(40.0005, 12);
  });

  it("latitude decreases with pixel y on north-up imagery", () => {
    const g = makeGeoRef(a, b);
    const top = pixelToLatLon(g, [100, 0]);
    const bottom = pixelToLatLon(g, [100, 700]);
    expect(top.lat).toBeGreaterThan(bottom.lat);
  });

  it("round trips pixel -> latlon -> pixel", () => {
    const g = makeGeoRef(a, b);
    for (const px of [[123, 456], [0, 799], [650.5, 12.25]] as [
      number,
      number
    ][]) {
      const back = latLonToPixel(g, pixelToLatLon(g, px));
      expect(back[0]).toBeCloseTo(px[0], 5);
      expect(back[1]).toBeCloseTo(px[1], 5);
    }
  });

  it("rejects anchors sharing a pixel axis", () => {
    const bad: Anchor = { pixel: [0, 500], latlon: { lat: 39.9, lon: -104.9 } };
    expect(() => makeGeoRef(a, bad)).toThrow(/pixel axes/);
  });

  it("rejects anchors sharing a lat or lon", () => {
    const bad: Anchor = {
      pixel: [800, 800],
      latlon: { lat: a.latlon.lat, lon: -104.9995 },
    };
    expect(() => makeGeoRef(a, bad)).toThrow(/latitude/);
  });
});
