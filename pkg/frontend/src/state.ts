/**
 * Viewer session state and the generation-pairing rules.
 *
 * The backend echoes the request generation on every mesh/render/stats
 * message.  The character view and the render view must never show
 * artifacts from different generations, so incoming frames are staged per
 * generation and committed only when both halves have arrived; stale
 * generations (older than the newest commit) are dropped.
 */

import {
  DofDescriptor,
  MeshHeaderMessage,
  RenderMessage,
  SnapshotMessage,
  StatsMessage,
} from "./protocol.js";

export interface OrbitCamera {
  azimuth: number;
  elevation: number;
  distance: number;
  target: [number, number, number];
}

export interface CommittedFrame {
  generation: number;
  vertices: Float32Array | null;
  renderPng: string | null;
  stats: Record<string, number> | null;
}

export type Mode = "replay" | "edit" | "orbit";

export interface ViewerState {
  connection: "connecting" | "connected" | "disconnected";
  mode: Mode;
  frame: number;
  frames: number;
  dofs: DofDescriptor[];
  dofValues: number[];
  camera: OrbitCamera;
  renderSize: [number, number];
  generation: number;
  lastError: string | null;
  // staging area per generation
  pendingVertices: Map<number, Float32Array>;
  pendingRender: Map<number, string>;
  pendingStats: Map<number, Record<string, number>>;
  committed: CommittedFrame;
}

export function initialState(): ViewerState {
  return {
    connection: "connecting",
    mode: "replay",
    frame: 0,
    frames: 0,
    dofs: [],
    dofValues: [],
    camera: { azimuth: 0, elevation: 10, distance: 2.5, target: [0, 0, 0.5] },
    renderSize: [256, 256],
    generation: 0,
    lastError: null,
    pendingVertices: new Map(),
    pendingRender: new Map(),
    pendingStats: new Map(),
    committed: { generation: -1, vertices: null, renderPng: null, stats: null },
  };
}

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Clamp a DoF edit to the descriptor range; never send raw values. */
export function clampedDofUpdate(
  state: ViewerState,
  index: number,
  value: number,
): number[] {
  const next = state.dofValues.slice();
  const d = state.dofs[index];
  if (!d) throw new Error(`dof index ${index} out of range`);
  next[index] = clamp(value, d.range[0], d.range[1]);
  return next;
}

export function nextGeneration(state: ViewerState): number {
  state.generation += 1;
  return state.generation;
}

export function applyHello(
  state: ViewerState,
  dofs: DofDescriptor[],
  frames: number,
  renderSize: [number, number],
): void {
  state.connection = "connected";
  state.dofs = dofs;
  state.dofValues = dofs.map((d) => d.value);
  state.frames = frames;
  state.renderSize = renderSize;
}

export function applySnapshot(state: ViewerState, snap: SnapshotMessage): void {
  state.mode = snap.mode as Mode;
  state.frame = snap.frame;
  state.dofValues = snap.dofs.slice();
  state.camera = {
    azimuth: snap.camera.azimuth,
    elevation: snap.camera.elevation,
    distance: snap.camera.distance,
    target: [snap.camera.target[0], snap.camera.target[1], snap.camera.target[2]],
  };
  state.generation = Math.max(state.generation, snap.generation);
}

function tryCommit(state: ViewerState, generation: number): boolean {
  const vertices = state.pendingVertices.get(generation);
  const render = state.pendingRender.get(generation);
  if (vertices === undefined || render === undefined) return false;
  if (generation < state.committed.generation) return false; // stale
  state.committed = {
    generation,
    vertices,
    renderPng: render,
    stats: state.pendingStats.get(generation) ?? state.committed.stats,
  };
  // drop everything at or below the committed generation
  for (const map of [state.pendingVertices, state.pendingRender, state.pendingStats]) {
    for (const g of Array.from(map.keys())) {
      if (g <= generation) map.delete(g);
    }
  }
  return true;
}

export function applyMeshPayload(
  state: ViewerState,
  header: MeshHeaderMessage,
  vertices: Float32Array,
): boolean {
  state.pendingVertices.set(header.generation, vertices);
  return tryCommit(state, header.generation);
}

export function applyRender(state: ViewerState, msg: RenderMessage): boolean {
  state.pendingRender.set(msg.generation, msg.png);
  return tryCommit(state, msg.generation);
}

export function applyStats(state: ViewerState, msg: StatsMessage): void {
  state.pendingStats.set(msg.generation, msg.timings_ms);
  if (msg.generation === state.committed.generation) {
    state.committed.stats = msg.timings_ms;
  }
  tryCommit(state, msg.generation);
}
