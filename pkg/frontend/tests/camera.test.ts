import { describe, expect, it } from "vitest";

import { eyePosition, orbit, viewProjection } from "../src/camera.js";
import { OrbitCamera } from "../src/state.js";

const base: OrbitCamera = {
  azimuth: 0,
  elevation: 0,
  distance: 2,
  target: [0, 0, 0.5],
};

describe("orbit", () => {
  it("wraps azimuth and clamps elevation and distance", () => {
    const spun = orbit(base, { azimuth: 370 });
    expect(spun.azimuth).toBeCloseTo(10);
    const tilted = orbit(base, { elevation: 200 });
    expect(tilted.elevation).toBe(89);
    const zoomed = orbit(base, { distanceFactor: 1e-9 });
    expect(zoomed.distance).toBeCloseTo(0.2);
  });

  it("eye position matches the backend convention", () => {
    const eye = eyePosition({ ...base, azimuth: 90, elevation: 0 });
    expect(eye[0]).toBeCloseTo(0, 10);
    expect(eye[1]).toBeCloseTo(2, 10);
    expect(eye[2]).toBeCloseTo(0.5, 10);
    const up = eyePosition({ ...base, azimuth: 0, elevation: 90 });
    expect(up[2]).toBeCloseTo(2.5, 10);
  });

  it("a 180 degree orbit mirrors the eye through the target", () => {
    const a = eyePosition(base);
    const b = eyePosition(orbit(base, { azimuth: 180 }));
    expect(b[0]).toBeCloseTo(2 * base.target[0] - a[0], 10);
    expect(b[1]).toBeCloseTo(2 * base.target[1] - a[1], 10);
  });
});

describe("viewProjection", () => {
  function apply(m: Float32Array, p: [number, number, number]) {
    const out = [0, 0, 0, 0];
    for (let row = 0; row < 4; row++) {
      out[row] =
        m[0 * 4 + row] * p[0] +
        m[1 * 4 + row] * p[1] +
        m[2 * 4 + row] * p[2] +
        m[3 * 4 + row];
    }
    return { x: out[0] / out[3], y: out[1] / out[3], z: out[2] / out[3], w: out[3] };
  }

  it("projects the target to the view center", () => {
    const mvp = viewProjection(base, 1.0);
    const center = apply(mvp, base.target);
    expect(center.x).toBeCloseTo(0, 6);
    expect(center.y).toBeCloseTo(0, 6);
    expect(center.w).toBeGreaterThan(0);
  });

  it("points above the target project above the center", () => {
    const mvp = viewProjection(base, 1.0);
    const above = apply(mvp, [0, 0, 0.8]);
    expect(above.y).toBeGreaterThan(0);
  });
});
