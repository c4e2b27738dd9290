import { describe, expect, it } from "vitest";

import {
  applyHello,
  applyMeshPayload,
  applyRender,
  applyStats,
  clampedDofUpdate,
  initialState,
} from "../src/state.js";

function connectedState() {
  const state = initialState();
  applyHello(
    state,
    [
      { name: "root_tx", range: [-1, 1], value: 0 },
      { name: "knee_rx", range: [-2, 0.2], value: 0 },
    ],
    100,
    [256, 256],
  );
  return state;
}

const header = (generation: number) =>
  ({ type: "mesh", generation, binary: "trit", vertex_count: 1 }) as const;
const render = (generation: number) =>
  ({ type: "render", generation, png: `png${generation}`, width: 8, height: 8 }) as const;

describe("generation pairing", () => {
  it("commits only when mesh and render of one generation both arrived", () => {
    const state = connectedState();
    expect(applyMeshPayload(state, header(1), new Float32Array([1, 2, 3]))).toBe(false);
    expect(state.committed.generation).toBe(-1);
    expect(applyRender(state, render(1))).toBe(true);
    expect(state.committed.generation).toBe(1);
    expect(state.committed.renderPng).toBe("png1");
    expect(Array.from(state.committed.vertices!)).toEqual([1, 2, 3]);
  });

  it("never mixes artifacts from different generations", () => {
    const state = connectedState();
    applyMeshPayload(state, header(1), new Float32Array([1]));
    applyMeshPayload(state, header(2), new Float32Array([2]));
    // render for generation 2 arrives before generation 1's
    expect(applyRender(state, render(2))).toBe(true);
    expect(state.committed.generation).toBe(2);
    // the late render of generation 1 must not roll the views back
    expect(applyRender(state, render(1))).toBe(false);
    expect(state.committed.generation).toBe(2);
    expect(state.committed.renderPng).toBe("png2");
  });

  it("drops staged artifacts once a newer generation commits", () => {
    const state = connectedState();
    applyMeshPayload(state, header(3), new Float32Array([3]));
    applyRender(state, render(3));
    expect(state.pendingVertices.size).toBe(0);
    expect(state.pendingRender.size).toBe(0);
  });

  it("binds stats to the committed generation", () => {
    const state = connectedState();
    applyMeshPayload(state, header(5), new Float32Array([5]));
    applyRender(state, render(5));
    applyStats(state, {
      type: "stats",
      generation: 5,
      timings_ms: { total_ms: 42 },
    });
    expect(state.committed.stats).toEqual({ total_ms: 42 });
  });
});

describe("dof clamping", () => {
  it("clamps slider edits to the descriptor range", () => {
    const state = connectedState();
    const clamped = clampedDofUpdate(state, 1, -5.0);
    expect(clamped[1]).toBe(-2);
    const upper = clampedDofUpdate(state, 1, 3.0);
    expect(upper[1]).toBeCloseTo(0.2);
  });

  it("rejects unknown dof indices", () => {
    const state = connectedState();
    expect(() => clampedDofUpdate(state, 9, 0)).toThrow(/out of range/);
  });
});
