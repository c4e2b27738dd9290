/**
 * Wire protocol shared with the steering backend.
 *
 * Control messages are JSON text frames; vertex buffers arrive as binary
 * frames in the TRIT tensor layout announced by the preceding mesh header.
 * Every message is validated before dispatch so malformed frames never
 * reach the views.
 */

export interface DofDescriptor {
  name: string;
  range: [number, number];
  value: number;
}

export interface HelloMessage {
  type: "hello";
  dofs: DofDescriptor[];
  frames: number;
  fps: number;
  faces: number[][];
  render_size: [number, number];
}

export interface MeshHeaderMessage {
  type: "mesh";
  generation: number;
  binary: "trit";
  vertex_count: number;
}

export interface RenderMessage {
  type: "render";
  generation: number;
  png: string;
  width: number;
  height: number;
}

export interface StatsMessage {
  type: "stats";
  generation: number;
  timings_ms: Record<string, number>;
}

export interface SnapshotMessage {
  type: "snapshot";
  mode: string;
  frame: number;
  dofs: number[];
  camera: {
    azimuth: number;
    elevation: number;
    distance: number;
    target: number[];
    width: number;
    height: number;
  };
  generation: number;
}

export interface ErrorMessage {
  type: "error";
  reason: string;
}

export type ServerMessage =
  | HelloMessage
  | MeshHeaderMessage
  | RenderMessage
  | StatsMessage
  | SnapshotMessage
  | ErrorMessage;

const isNum = (v: unknown): v is number =>
  typeof v === "number" && Number.isFinite(v);

function isNumberArray(v: unknown, length?: number): v is number[] {
  return (
    Array.isArray(v) &&
    (length === undefined || v.length === length) &&
    v.every(isNum)
  );
}

/** Narrow an arbitrary parsed JSON value to a server message, or null. */
export function parseServerMessage(raw: unknown): ServerMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "hello": {
      if (
        !Array.isArray(msg.dofs) ||
        !msg.dofs.every(
          (d) =>
            typeof d === "object" &&
            d !== null &&
            typeof (d as any).name === "string" &&
            isNumberArray((d as any).range, 2) &&
            isNum((d as any).value),
        )
      )
        return null;
      if (!isNum(msg.frames) || !isNum(msg.fps)) return null;
      if (!Array.isArray(msg.faces)) return null;
      if (!isNumberArray(msg.render_size, 2)) return null;
      return msg as unknown as HelloMessage;
    }
    case "mesh":
      if (!isNum(msg.generation) || msg.binary !== "trit" || !isNum(msg.vertex_count))
        return null;
      return msg as unknown as MeshHeaderMessage;
    case "render":
      if (
        !isNum(msg.generation) ||
        typeof msg.png !== "string" ||
        !isNum(msg.width) ||
        !isNum(msg.height)
      )
        return null;
      return msg as unknown as RenderMessage;
    case "stats":
      if (!isNum(msg.generation) || typeof msg.timings_ms !== "object" || msg.timings_ms === null)
        return null;
      return msg as unknown as StatsMessage;
    case "snapshot":
      if (!isNum(msg.frame) || !isNumberArray(msg.dofs) || !isNum(msg.generation))
        return null;
      return msg as unknown as SnapshotMessage;
    case "error":
      if (typeof msg.reason !== "string") return null;
      return msg as unknown as ErrorMessage;
    default:
      return null;
  }
}

export type ClientMessage =
  | { type: "set_mode"; mode: "replay" | "edit" | "orbit"; generation: number }
  | { type: "set_frame"; frame: number; generation: number }
  | { type: "set_dofs"; dofs: number[]; generation: number }
  | {
      type: "set_camera";
      azimuth: number;
      elevation: number;
      distance: number;
      target: number[];
      width?: number;
      height?: number;
      generation: number;
    }
  | { type: "get_snapshot" };

/** Validate an outgoing message; throws so tests catch schema drift early. */
export function validateClientMessage(msg: ClientMessage): ClientMessage {
  switch (msg.type) {
    case "set_mode":
      if (!["replay", "edit", "orbit"].includes(msg.mode))
        throw new Error(`bad mode ${msg.mode}`);
      break;
    case "set_frame":
      if (!Number.isInteger(msg.frame) || msg.frame < 0)
        throw new Error(`bad frame ${msg.frame}`);
      break;
    case "set_dofs":
      if (!isNumberArray(msg.dofs)) throw new Error("dofs must be numbers");
      break;
    case "set_camera":
      if (!isNum(msg.distance) || msg.distance <= 0)
        throw new Error("camera distance must be positive");
      if (!isNumberArray(msg.target, 3)) throw new Error("bad camera target");
      break;
    case "get_snapshot":
      break;
  }
  return msg;
}

/** Parse a binary tensor frame: "TRIT", u32 rank, u32 dims, f32 payload. */
export function parseTensor(buffer: ArrayBuffer): {
  dims: number[];
  data: Float32Array;
} {
  const view = new DataView(buffer);
  if (buffer.byteLength < 8) throw new Error("tensor frame too short");
  const magic = String.fromCharCode(
    view.getUint8(0),
    view.getUint8(1),
    view.getUint8(2),
    view.getUint8(3),
  );
  if (magic !== "TRIT") throw new Error(`bad tensor magic ${magic}`);
  const rank = view.getUint32(4, true);
  if (rank > 32) throw new Error(`implausible tensor rank ${rank}`);
  const dims: number[] = [];
  let offset = 8;
  for (let i = 0; i < rank; i++) {
    dims.push(view.getUint32(offset, true));
    offset += 4;
  }
  const count = dims.reduce((a, b) => a * b, 1);
  if (buffer.byteLength !== offset + 4 * count)
    throw new Error("tensor payload size mismatch");
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat32(offset + 4 * i, true);
  }
  return { dims, data };
}
