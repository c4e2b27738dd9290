/**
 * Three-pane viewer: control panel, character view (client-side WebGL of
 * the streamed mesh), and render view (server-rendered imagery).
 */

import { Connection } from "./connection.js";
import { MeshView } from "./meshview.js";
import { orbit } from "./camera.js";
import {
  applyHello,
  applyMeshPayload,
  applyRender,
  applySnapshot,
  applyStats,
  clampedDofUpdate,
  initialState,
  nextGeneration,
  ViewerState,
} from "./state.js";
import { ServerMessage } from "./protocol.js";

const state: ViewerState = initialState();

const panel = document.getElementById("control-panel")!;
const statusEl = document.getElementById("status")!;
const statsEl = document.getElementById("stats")!;
const renderImg = document.getElementById("render-view") as HTMLImageElement;
const meshCanvas = document.getElementById("character-view") as HTMLCanvasElement;

let meshView: MeshView | null = null;
try {
  meshView = new MeshView(meshCanvas);
} catch (err) {
  statusEl.textContent = `character view unavailable: ${err}`;
}

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const connection = new Connection(wsUrl, {
  onStatus(status) {
    state.connection = status;
    statusEl.textContent = status === "connected" ? "connected" : `${status}…`;
    statusEl.className = status;
  },
  onMessage(msg, binary) {
    handleMessage(msg, binary);
  },
});

function handleMessage(msg: ServerMessage, binary?: Float32Array): void {
  switch (msg.type) {
    case "hello":
      applyHello(state, msg.dofs, msg.frames, msg.render_size);
      meshView?.setFaces(msg.faces);
      buildPanel();
      sendCamera(); // kick off the first frame
      break;
    case "mesh":
      if (binary && applyMeshPayload(state, msg, binary)) commitViews();
      break;
    case "render":
      if (applyRender(state, msg)) commitViews();
      break;
    case "stats":
      applyStats(state, msg);
      renderStats();
      break;
    case "snapshot":
      applySnapshot(state, msg);
      refreshPanelValues();
      break;
    case "error":
      state.lastError = msg.reason;
      statusEl.textContent = `backend error: ${msg.reason}`;
      break;
  }
}

function commitViews(): void {
  const frame = state.committed;
  if (frame.vertices && meshView) {
    meshView.setVertices(frame.vertices);
    meshView.draw(state.camera);
  }
  if (frame.renderPng) {
    renderImg.src = `data:image/png;base64,${frame.renderPng}`;
  }
  renderStats();
}

function renderStats(): void {
  const s = state.committed.stats;
  if (!s) return;
  const rows = Object.entries(s)
    .map(([k, v]) => `${k.replace("_ms", "")} ${v.toFixed(1)} ms`)
    .join(" · ");
  statsEl.textContent = `gen ${state.committed.generation} · ${rows}`;
}

function sendDofs(): void {
  connection.send({
    type: "set_dofs",
    dofs: state.dofValues,
    generation: nextGeneration(state),
  });
}

function sendFrame(frame: number): void {
  state.frame = frame;
  connection.send({ type: "set_frame", frame, generation: nextGeneration(state) });
}

function sendMode(mode: "replay" | "edit" | "orbit"): void {
  state.mode = mode;
  connection.send({ type: "set_mode", mode, generation: nextGeneration(state) });
}

function sendCamera(): void {
  connection.send({
    type: "set_camera",
    azimuth: state.camera.azimuth,
    elevation: state.camera.elevation,
    distance: state.camera.distance,
    target: [...state.camera.target],
    width: state.renderSize[0],
    height: state.renderSize[1],
    generation: nextGeneration(state),
  });
  meshView?.draw(state.camera);
}

function slider(
  label: string,
  min: number,
  max: number,
  step: number,
  value: number,
  onInput: (v: number) => void,
): HTMLElement {
  const row = document.createElement("label");
  row.className = "slider-row";
  const caption = document.createElement("span");
  caption.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(min);
  input.max = String(max);
  input.step = String(step);
  input.value = String(value);
  const readout = document.createElement("code");
  readout.textContent = value.toFixed(2);
  input.addEventListener("input", () => {
    const v = Number(input.value);
    readout.textContent = v.toFixed(2);
    onInput(v);
  });
  row.append(caption, input, readout);
  return row;
}

let dofInputs: HTMLInputElement[] = [];

function buildPanel(): void {
  panel.textContent = "";
  dofInputs = [];

  const modeRow = document.createElement("div");
  modeRow.className = "mode-row";
  for (const mode of ["replay", "edit", "orbit"] as const) {
    const button = document.createElement("button");
    button.textContent = mode;
    button.addEventListener("click", () => sendMode(mode));
    modeRow.append(button);
  }
  panel.append(modeRow);

  panel.append(
    slider("frame", 0, Math.max(state.frames - 1, 0), 1, state.frame, (v) =>
      sendFrame(Math.round(v)),
    ),
  );

  const dofHeader = document.createElement("h3");
  dofHeader.textContent = `skeleton DoFs (${state.dofs.length})`;
  panel.append(dofHeader);
  state.dofs.forEach((d, i) => {
    const row = slider(d.name, d.range[0], d.range[1], 0.01, state.dofValues[i], (v) => {
      state.dofValues = clampedDofUpdate(state, i, v);
      sendDofs();
    });
    dofInputs.push(row.querySelector("input")!);
    panel.append(row);
  });

  const camHeader = document.createElement("h3");
  camHeader.textContent = "camera";
  panel.append(camHeader);
  panel.append(
    slider("azimuth", 0, 360, 1, state.camera.azimuth, (v) => {
      state.camera = { ...state.camera, azimuth: v };
      sendCamera();
    }),
    slider("elevation", -89, 89, 1, state.camera.elevation, (v) => {
      state.camera = { ...state.camera, elevation: v };
      sendCamera();
    }),
    slider("distance", 0.5, 6, 0.05, state.camera.distance, (v) => {
      state.camera = orbit(state.camera, {
        distanceFactor: v / state.camera.distance,
      });
      sendCamera();
    }),
  );
}

function refreshPanelValues(): void {
  state.dofValues.forEach((v, i) => {
    if (dofInputs[i]) dofInputs[i].value = String(v);
  });
}

// drag-to-orbit on the character view
let dragging = false;
let lastX = 0;
let lastY = 0;
meshCanvas.addEventListener("mousedown", (e) => {
  dragging = true;
  lastX = e.clientX;
  lastY = e.clientY;
});
window.addEventListener("mouseup", () => (dragging = false));
window.addEventListener("mousemove", (e) => {
  if (!dragging) return;
  state.camera = orbit(state.camera, {
    azimuth: (e.clientX - lastX) * 0.5,
    elevation: -(e.clientY - lastY) * 0.5,
  });
  lastX = e.clientX;
  lastY = e.clientY;
  sendCamera();
});
meshCanvas.addEventListener("wheel", (e) => {
  e.preventDefault();
  state.camera = orbit(state.camera, { distanceFactor: Math.exp(e.deltaY * 0.001) });
  sendCamera();
});
