/** Orbit-camera math for the control panel and drag interactions. */

import { OrbitCamera } from "./state.js";
import { clamp } from "./state.js";

export interface OrbitDelta {
  azimuth?: number;
  elevation?: number;
  distanceFactor?: number;
}

export function orbit(camera: OrbitCamera, delta: OrbitDelta): OrbitCamera {
  const azimuth = (((camera.azimuth + (delta.azimuth ?? 0)) % 360) + 360) % 360;
  const elevation = clamp(camera.elevation + (delta.elevation ?? 0), -89, 89);
  const distance = clamp(camera.distance * (delta.distanceFactor ?? 1), 0.2, 20);
  return { ...camera, azimuth, elevation, distance };
}

/** Camera eye position matching the backend's orbit convention. */
export function eyePosition(camera: OrbitCamera): [number, number, number] {
  const az = (camera.azimuth * Math.PI) / 180;
  const el = (camera.elevation * Math.PI) / 180;
  return [
    camera.target[0] + camera.distance * Math.cos(el) * Math.cos(az),
    camera.target[1] + camera.distance * Math.cos(el) * Math.sin(az),
    camera.target[2] + camera.distance * Math.sin(el),
  ];
}

/**
 * Column-major view-projection matrix for the WebGL character view,
 * consistent with eyePosition (z up, y down in clip space).
 */
export function viewProjection(
  camera: OrbitCamera,
  aspect: number,
  fovDeg = 40,
): Float32Array {
  const eye = eyePosition(camera);
  const t = camera.target;
  const fwd = normalize([t[0] - eye[0], t[1] - eye[1], t[2] - eye[2]]);
  let right = cross(fwd, [0, 0, 1]);
  if (norm(right) < 1e-9) right = cross(fwd, [0, 1, 0]);
  right = normalize(right);
  const up = cross(right, fwd);

  const f = 1 / Math.tan(((fovDeg * Math.PI) / 180) / 2);
  const near = 0.05;
  const far = 100;
  // view: rows right/up/-fwd with translation; projection: standard GL
  const view = [
    right[0], up[0], -fwd[0], 0,
    right[1], up[1], -fwd[1], 0,
    right[2], up[2], -fwd[2], 0,
    -dot(right, eye), -dot(up, eye), dot(fwd, eye), 1,
  ];
  const proj = [
    f / aspect, 0, 0, 0,
    0, f, 0, 0,
    0, 0, (far + near) / (near - far), -1,
    0, 0, (2 * far * near) / (near - far), 0,
  ];
  return multiply4(proj, view);
}

type Vec3 = [number, number, number];

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return [a[0] / n, a[1] / n, a[2] / n];
}

function multiply4(a: number[], b: number[]): Float32Array {
  const out = new Float32Array(16);
  for (let col = 0; col < 4; col++) {
    for (let row = 0; row < 4; row++) {
      let acc = 0;
      for (let k = 0; k < 4; k++) {
        acc += a[k * 4 + row] * b[col * 4 + k];
      }
      out[col * 4 + row] = acc;
    }
  }
  return out;
}
