import { describe, expect, it } from "vitest";

import {
  parseServerMessage,
  parseTensor,
  validateClientMessage,
} from "../src/protocol.js";

function tensorBytes(dims: number[], values: number[]): ArrayBuffer {
  const count = dims.reduce((a, b) => a * b, 1);
  const buffer = new ArrayBuffer(8 + 4 * dims.length + 4 * count);
  const view = new DataView(buffer);
  view.setUint8(0, 0x54); // T
  view.setUint8(1, 0x52); // R
  view.setUint8(2, 0x49); // I
  view.setUint8(3, 0x54); // T
  view.setUint32(4, dims.length, true);
  dims.forEach((d, i) => view.setUint32(8 + 4 * i, d, true));
  values.forEach((v, i) =>
    view.setFloat32(8 + 4 * dims.length + 4 * i, v, true),
  );
  return buffer;
}

describe("parseTensor", () => {
  it("round-trips a small tensor", () => {
    const buffer = tensorBytes([2, 3], [1, 2, 3, 4, 5, 6]);
    const { dims, data } = parseTensor(buffer);
    expect(dims).toEqual([2, 3]);
    expect(Array.from(data)).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it("rejects a bad magic", () => {
    const buffer = tensorBytes([1], [1]);
    new DataView(buffer).setUint8(0, 0x58);
    expect(() => parseTensor(buffer)).toThrow(/magic/);
  });

  it("rejects a truncated payload", () => {
    const buffer = tensorBytes([4], [1, 2, 3, 4]).slice(0, 20);
    expect(() => parseTensor(buffer)).toThrow(/size/);
  });
});

describe("parseServerMessage", () => {
  it("accepts a well-formed hello", () => {
    const msg = parseServerMessage({
      type: "hello",
      dofs: [{ name: "knee", range: [-2, 0.2], value: 0 }],
      frames: 100,
      fps: 25,
      faces: [[0, 1, 2]],
      render_size: [256, 256],
    });
    expect(msg?.type).toBe("hello");
  });

  it("rejects a hello with malformed dofs", () => {
    expect(
      parseServerMessage({
        type: "hello",
        dofs: [{ name: 3, range: [0], value: "x" }],
        frames: 1,
        fps: 25,
        faces: [],
        render_size: [64, 64],
      }),
    ).toBeNull();
  });

  it("accepts mesh/render/stats and rejects unknown types", () => {
    expect(
      parseServerMessage({ type: "mesh", generation: 4, binary: "trit", vertex_count: 10 })
        ?.type,
    ).toBe("mesh");
    expect(
      parseServerMessage({ type: "render", generation: 4, png: "aa", width: 8, height: 8 })
        ?.type,
    ).toBe("render");
    expect(
      parseServerMessage({ type: "stats", generation: 4, timings_ms: { total_ms: 1 } })
        ?.type,
    ).toBe("stats");
    expect(parseServerMessage({ type: "teleport" })).toBeNull();
    expect(parseServerMessage("nope")).toBeNull();
  });
});

describe("validateClientMessage", () => {
  it("passes well-formed messages through", () => {
    expect(
      validateClientMessage({ type: "set_dofs", dofs: [0, 1], generation: 1 }),
    ).toBeTruthy();
    expect(
      validateClientMessage({
        type: "set_camera",
        azimuth: 10,
        elevation: 5,
        distance: 2,
        target: [0, 0, 0.5],
        generation: 2,
      }),
    ).toBeTruthy();
  });

  it("rejects invalid camera distance and frames", () => {
    expect(() =>
      validateClientMessage({
        type: "set_camera",
        azimuth: 0,
        elevation: 0,
        distance: 0,
        target: [0, 0, 0],
        generation: 1,
      }),
    ).toThrow(/distance/);
    expect(() =>
      validateClientMessage({ type: "set_frame", frame: -3, generation: 1 }),
    ).toThrow(/frame/);
  });
});
