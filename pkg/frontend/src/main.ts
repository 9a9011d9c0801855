/** DOM wiring for the calibration tool.
 *
 * Left panel: camera frame. Right panel: satellite image with two anchor
 * points for georeferencing. Clicking camera-then-satellite adds a pair;
 * every edit re-solves through the service after a debounce.
 */

import { Anchor, GeoRef, makeGeoRef } from "./georef.js";
import {
  SessionState,
  beginPair,
  completePair,
  createSession,
  deletePair,
  renamePair,
  setSolve,
  solveEnabled,
} from "./state.js";
import { exportLandmarks, importLandmarks } from "./landmarks.js";
import {
  Intrinsics,
  SolveClient,
  SolveOutcome,
  buildSolveBody,
} from "./solveClient.js";
import { banner, errorMarkers, rmsLabel } from "./overlay.js";

let state: SessionState = createSession();
let lastError: { code: string; message: string } | null = null;
let georef: GeoRef | null = null;

const $ = (id: string) => document.getElementById(id) as HTMLElement;
const cameraCanvas = $("camera-canvas") as HTMLCanvasElement;
const satCanvas = $("sat-canvas") as HTMLCanvasElement;
const cameraImage = new Image();
const satImage = new Image();

const client = new SolveClient((body) =>
  fetch("/api/solve", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  })
);

function intrinsics(): Intrinsics {
  const num = (id: string) =>
    Number(($(id) as HTMLInputElement).value);
  return {
    fx: num("fx"),
    fy: num("fy"),
    cx: num("cx"),
    cy: num("cy"),
    width: cameraImage.naturalWidth || num("cx") * 2,
    height: cameraImage.naturalHeight || num("cy") * 2,
  };
}

function readAnchors(): GeoRef | null {
  const num = (id: string) =>
    Number(($(id) as HTMLInputElement).value);
  const a: Anchor = {
    pixel: [num("a-px"), num("a-py")],
    latlon: { lat: num("a-lat"), lon: num("a-lon") },
  };
  const b: Anchor = {
    pixel: [num("b-px"), num("b-py")],
    latlon: { lat: num("b-lat"), lon: num("b-lon") },
  };
  try {
    return makeGeoRef(a, b);
  } catch {
    return null;
  }
}

function requestSolve() {
  georef = readAnchors();
  if (georef === null || !solveEnabled(state)) {
    state = setSolve(state, null);
    render();
    return;
  }
  client.request(
    buildSolveBody(state, georef, intrinsics()),
    (outcome: SolveOutcome) => {
      lastError = outcome.error;
      state = setSolve(state, outcome.solve);
      render();
    }
  );
  render();
}

function drawPanel(
  canvas: HTMLCanvasElement,
  image: HTMLImageElement,
  drawPoints: (ctx: CanvasRenderingContext2D) => void
) {
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (image.src) {
    canvas.width = image.naturalWidth;
    canvas.height = image.naturalHeight;
    ctx.drawImage(image, 0, 0);
  }
  drawPoints(ctx);
}

function render() {
  drawPanel(cameraCanvas, cameraImage, (ctx) => {
    for (const m of errorMarkers(state)) {
      ctx.strokeStyle = "#ff3333";
      ctx.fillStyle = "#ff3333";
      ctx.beginPath();
      ctx.arc(m.pixel[0], m.pixel[1], 3, 0, Math.PI * 2);
      ctx.fill();
      if (m.radius !== null && m.radius > 0.5) {
        ctx.beginPath();
        ctx.arc(m.pixel[0], m.pixel[1], m.radius, 0, Math.PI * 2);
        ctx.stroke();
      }
      ctx.fillText(m.name, m.pixel[0] + 6, m.pixel[1] - 6);
    }
  });
  drawPanel(satCanvas, satImage, (ctx) => {
    for (const p of state.pairs) {
      if (p.satellitePixel === null) continue;
      ctx.fillStyle = "#3366ff";
      ctx.beginPath();
      ctx.arc(p.satellitePixel[0], p.satellitePixel[1], 3, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillText(p.name, p.satellitePixel[0] + 6, p.satellitePixel[1] - 6);
    }
  });

  const list = $("pair-list");
  list.innerHTML = "";
  const solve = state.lastSolve;
  let completeIdx = 0;
  for (const p of state.pairs) {
    const li = document.createElement("li");
    const name = document.createElement("input");
    name.value = p.name;
    name.addEventListener("change", () => {
      state = renamePair(state, p.id, name.value);
      requestSolve();
    });
    li.appendChild(name);
    const info = document.createElement("span");
    if (p.satellitePixel === null) {
      info.textContent = " awaiting satellite click";
    } else {
      const i = completeIdx++;
      const err =
        solve && i < solve.errors.length && solve.errors[i] !== null
          ? `${(solve.errors[i] as number).toFixed(2)} px`
          : "--";
      info.textContent = ` error ${err}`;
    }
    li.appendChild(info);
    const del = document.createElement("button");
    del.textContent = "delete";
    del.addEventListener("click", () => {
      state = deletePair(state, p.id);
      requestSolve();
    });
    li.appendChild(del);
    list.appendChild(li);
  }

  const msg = banner(state, lastError);
  $("banner").textContent = msg ?? "";
  ($("banner") as HTMLElement).style.display = msg ? "block" : "none";
  $("rms").textContent = rmsLabel(state);
}

function bindImagePicker(inputId: string, image: HTMLImageElement) {
  ($(inputId) as HTMLInputElement).addEventListener("change", (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    image.onload = () => render();
    image.src = URL.createObjectURL(file);
  });
}

function canvasPixel(
  canvas: HTMLCanvasElement,
  ev: MouseEvent
): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) * canvas.width) / rect.width,
    ((ev.clientY - rect.top) * canvas.height) / rect.height,
  ];
}

bindImagePicker("camera-file", cameraImage);
bindImagePicker("sat-file", satImage);

cameraCanvas.addEventListener("click", (ev) => {
  state = beginPair(state, canvasPixel(cameraCanvas, ev));
  requestSolve();
});
satCanvas.addEventListener("click", (ev) => {
  state = completePair(state, canvasPixel(satCanvas, ev));
  requestSolve();
});

for (const id of ["a-px", "a-py", "a-lat", "a-lon", "b-px", "b-py",
                  "b-lat", "b-lon", "fx", "fy", "cx", "cy"]) {
  $(id).addEventListener("change", requestSolve);
}

$("export").addEventListener("click", () => {
  const g = readAnchors();
  if (g === null) {
    lastError = { code: "georef", message: "set both satellite anchors first" };
    render();
    return;
  }
  const blob = new Blob([exportLandmarks(state, g)], {
    type: "application/json",
  });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "landmarks.json";
  a.click();
});

($("import") as HTMLInputElement).addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  const g = readAnchors();
  if (!file || g === null) return;
  try {
    state = importLandmarks(await file.text(), g);
    lastError = null;
  } catch (err) {
    lastError = { code: "import", message: String(err) };
  }
  requestSolve();
});

render();
