/** Satellite image georeferencing from two anchor points.
 *
 * Assumes north-up imagery: longitude varies linearly with pixel x and
 * latitude with pixel y, so two anchors that differ in both axes fix the map.
 */

export interface LatLon {
  lat: number;
  lon: number;
}

export interface Anchor {
  pixel: [number, number];
  latlon: LatLon;
}

export interface GeoRef {
  a: Anchor;
  b: Anchor;
}

export function makeGeoRef(a: Anchor, b: Anchor): GeoRef {
  if (a.pixel[0] === b.pixel[0] || a.pixel[1] === b.pixel[1]) {
    throw new Error("anchors must differ in both pixel axes");
  }
  if (a.latlon.lon === b.latlon.lon || a.latlon.lat === b.latlon.lat) {
    throw new Error("anchors must differ in both latitude and longitude");
  }
  return { a, b };
}

export function pixelToLatLon(g: GeoRef, pixel: [number, number]): LatLon {
  const { a, b } = g;
  const lon =
    a.latlon.lon +
    ((pixel[0] - a.pixel[0]) * (b.latlon.lon - a.latlon.lon)) /
      (b.pixel[0] - a.pixel[0]);
  const lat =
    a.latlon.lat +
    ((pixel[1] - a.pixel[1]) * (b.latlon.lat - a.latlon.lat)) /
      (b.pixel[1] - a.pixel[1]);
  return { lat, lon };
}

export function latLonToPixel(g: GeoRef, ll: LatLon): [number, number] {
  const { a, b } = g;
  const x =
    a.pixel[0] +
    ((ll.lon - a.latlon.lon) * (b.pixel[0] - a.pixel[0])) /
      (b.latlon.lon - a.latlon.lon);
  const y =
    a.pixel[1] +
    ((ll.lat - a.latlon.lat) * (b.pixel[1] - a.pixel[1])) /
      (b.latlon.lat - a.latlon.lat);
  return [x, y];
}
