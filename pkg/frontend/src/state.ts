/** Session state for the correspondence-clicking workflow.
 *
 * A pair starts from a camera-panel click, completes with a satellite-panel
 * click, and keeps its id for life: edits never renumber existing pairs.
 */

export interface Pair {
  id: number;
  name: string;
  cameraPixel: [number, number];
  satellitePixel: [number, number] | null;
}

export interface SolveResponse {
  pose: { R: number[][]; T: number[] };
  errors: (number | null)[];
  rms: number;
}

export interface SessionState {
  pairs: Pair[];
  nextId: number;
  lastSolve: SolveResponse | null;
}

export const MIN_PAIRS = 4;

export function createSession(): SessionState {
  return { pairs: [], nextId: 1, lastSolve: null };
}

/** Camera click: opens a new pair awaiting its satellite side. */
export function beginPair(
  state: SessionState,
  cameraPixel: [number, number]
): SessionState {
  const pair: Pair = {
    id: state.nextId,
    name: `P${state.nextId}`,
    cameraPixel,
    satellitePixel: null,
  };
  return { ...state, pairs: [...state.pairs, pair], nextId: state.nextId + 1 };
}

/** Satellite click: completes the most recent incomplete pair, if any. */
export function completePair(
  state: SessionState,
  satellitePixel: [number, number]
): SessionState {
  const idx = state.pairs.findIndex((p) => p.satellitePixel === null);
  if (idx < 0) return state;
  const pairs = state.pairs.slice();
  pairs[idx] = { ...pairs[idx], satellitePixel };
  return { ...state, pairs };
}

export function addPair(
  state: SessionState,
  cameraPixel: [number, number],
  satellitePixel: [number, number]
): SessionState {
  return completePair(beginPair(state, cameraPixel), satellitePixel);
}

export function deletePair(state: SessionState, id: number): SessionState {
  return {
    ...state,
    pairs: state.pairs.filter((p) => p.id !== id),
    lastSolve: null,
  };
}

export function renamePair(
  state: SessionState,
  id: number,
  name: string
): SessionState {
  return {
    ...state,
    pairs: state.pairs.map((p) => (p.id === id ? { ...p, name } : p)),
  };
}

export function movePoint(
  state: SessionState,
  id: number,
  side: "camera" | "satellite",
  pixel: [number, number]
): SessionState {
  return {
    ...state,
    pairs: state.pairs.map((p) => {
      if (p.id !== id) return p;
      return side === "camera"
        ? { ...p, cameraPixel: pixel }
        : { ...p, satellitePixel: pixel };
    }),
  };
}

export function completePairs(state: SessionState): Pair[] {
  return state.pairs.filter((p) => p.satellitePixel !== null);
}

export function solveEnabled(state: SessionState): boolean {
  return completePairs(state).length >= MIN_PAIRS;
}

export function setSolve(
  state: SessionState,
  solve: SolveResponse | null
): SessionState {
  return { ...state, lastSolve: solve };
}
