/** Debounced solve requests with stale-response rejection.
 *
 * Each edit schedules a solve 300 ms out, cancelling any pending one. A
 * sequence number stamps every dispatched request; responses arriving after
 * a newer dispatch are dropped, so the latest edit always wins.
 */

import { GeoRef, pixelToLatLon } from "./georef.js";
import { SessionState, SolveResponse, completePairs } from "./state.js";

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

export interface SolveOutcome {
  ok: boolean;
  solve: SolveResponse | null;
  error: { code: string; message: string } | null;
}

export type Poster = (
  body: unknown
) => Promise<{ status: number; json(): Promise<any> }>;

export const DEBOUNCE_MS = 300;

export function buildSolveBody(
  state: SessionState,
  georef: GeoRef,
  intrinsics: Intrinsics
): unknown {
  return {
    intrinsics,
    reference: { lat: georef.a.latlon.lat, lon: georef.a.latlon.lon },
    correspondences: completePairs(state).map((p) => {
      const ll = pixelToLatLon(georef, p.satellitePixel as [number, number]);
      return {
        name: p.name,
        pixel: p.cameraPixel,
        latlon: { lat: ll.lat, lon: ll.lon, alt: 0.0 },
      };
    }),
  };
}

export class SolveClient {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private seq = 0;

  constructor(
    private post: Poster,
    private debounceMs: number = DEBOUNCE_MS
  ) {}

  /** Schedule a solve for `body`; `onOutcome` fires unless superseded. */
  request(body: unknown, onOutcome: (outcome: SolveOutcome) => void): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      const mySeq = ++this.seq;
      this.post(body)
        .then(async (resp) => {
          const data = await resp.json();
          if (mySeq !== this.seq) return; // a newer request went out
          if (resp.status === 200) {
            onOutcome({ ok: true, solve: data as SolveResponse, error: null });
          } else {
            onOutcome({
              ok: false,
              solve: null,
              error: {
                code: String(data.code ?? "error"),
                message: String(data.message ?? "solve failed"),
              },
            });
          }
        })
        .catch((err) => {
          if (mySeq !== this.seq) return;
          onOutcome({
            ok: false,
            solve: null,
            error: { code: "network", message: String(err) },
          });
        });
    }, this.debounceMs);
  }

  cancel(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
    this.seq++;
  }
}
