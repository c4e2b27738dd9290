/** Flat-shaded WebGL renderer for the character view. */

import { viewProjection } from "./camera.js";
import { OrbitCamera } from "./state.js";

const VERTEX_SHADER = `
attribute vec3 position;
attribute vec3 normal;
uniform mat4 viewProjection;
varying vec3 vNormal;
void main() {
  gl_Position = viewProjection * vec4(position, 1.0);
  vNormal = normal;
}
`;

const FRAGMENT_SHADER = `
precision mediump float;
varying vec3 vNormal;
void main() {
  vec3 n = normalize(vNormal);
  vec3 light = normalize(vec3(0.4, 0.3, 0.85));
  float diffuse = max(dot(n, light), 0.0);
  float fill = max(dot(n, vec3(-0.5, -0.4, 0.2)), 0.0) * 0.25;
  vec3 base = vec3(0.55, 0.62, 0.75);
  gl_FragColor = vec4(base * (0.25 + 0.75 * diffuse + fill), 1.0);
}
`;

export class MeshView {
  private gl: WebGLRenderingContext;
  private program: WebGLProgram;
  private positionBuffer: WebGLBuffer;
  private normalBuffer: WebGLBuffer;
  private vertexCount = 0;
  private faces: Uint32Array = new Uint32Array(0);
  private canvas: HTMLCanvasElement;

  constructor(canvas: HTMLCanvasElement) {
    this.canvas = canvas;
    const gl = canvas.getContext("webgl");
    if (!gl) throw new Error("WebGL unavailable");
    this.gl = gl;
    this.program = this.buildProgram();
    this.positionBuffer = gl.createBuffer()!;
    this.normalBuffer = gl.createBuffer()!;
    gl.enable(gl.DEPTH_TEST);
  }

  private buildProgram(): WebGLProgram {
    const gl = this.gl;
    const compile = (kind: number, source: string) => {
      const shader = gl.createShader(kind)!;
      gl.shaderSource(shader, source);
      gl.compileShader(shader);
      if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
        throw new Error(gl.getShaderInfoLog(shader) ?? "shader compile failed");
      }
      return shader;
    };
    const program = gl.createProgram()!;
    gl.attachShader(program, compile(gl.VERTEX_SHADER, VERTEX_SHADER));
    gl.attachShader(program, compile(gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(program) ?? "link failed");
    }
    return program;
  }

  setFaces(faces: number[][]): void {
    this.faces = new Uint32Array(faces.flat());
  }

  /** Rebuild the non-indexed flat-shaded buffers from fresh vertices. */
  setVertices(vertices: Float32Array): void {
    const faceCount = this.faces.length / 3;
    const positions = new Float32Array(faceCount * 9);
    const normals = new Float32Array(faceCount * 9);
    for (let f = 0; f < faceCount; f++) {
      const ia = this.faces[3 * f];
      const ib = this.faces[3 * f + 1];
      const ic = this.faces[3 * f + 2];
      const ax = vertices[3 * ia], ay = vertices[3 * ia + 1], az = vertices[3 * ia + 2];
      const bx = vertices[3 * ib], by = vertices[3 * ib + 1], bz = vertices[3 * ib + 2];
      const cx = vertices[3 * ic], cy = vertices[3 * ic + 1], cz = vertices[3 * ic + 2];
      const ux = bx - ax, uy = by - ay, uz = bz - az;
      const vx = cx - ax, vy = cy - ay, vz = cz - az;
      let nx = uy * vz - uz * vy;
      let ny = uz * vx - ux * vz;
      let nz = ux * vy - uy * vx;
      const len = Math.hypot(nx, ny, nz) || 1;
      nx /= len; ny /= len; nz /= len;
      const base = 9 * f;
      positions.set([ax, ay, az, bx, by, bz, cx, cy, cz], base);
      for (let k = 0; k < 3; k++) normals.set([nx, ny, nz], base + 3 * k);
    }
    const gl = this.gl;
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, positions, gl.DYNAMIC_DRAW);
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.bufferData(gl.ARRAY_BUFFER, normals, gl.DYNAMIC_DRAW);
    this.vertexCount = faceCount * 3;
  }

  draw(camera: OrbitCamera): void {
    const gl = this.gl;
    const { width, height } = this.canvas;
    gl.viewport(0, 0, width, height);
    gl.clearColor(0.12, 0.13, 0.16, 1.0);
    gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);
    if (!this.vertexCount) return;
    gl.useProgram(this.program);
    const mvp = viewProjection(camera, width / height);
    const loc = gl.getUniformLocation(this.program, "viewProjection");
    gl.uniformMatrix4fv(loc, false, mvp);
    const posAttr = gl.getAttribLocation(this.program, "position");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.positionBuffer);
    gl.enableVertexAttribArray(posAttr);
    gl.vertexAttribPointer(posAttr, 3, gl.FLOAT, false, 0, 0);
    const nrmAttr = gl.getAttribLocation(this.program, "normal");
    gl.bindBuffer(gl.ARRAY_BUFFER, this.normalBuffer);
    gl.enableVertexAttribArray(nrmAttr);
    gl.vertexAttribPointer(nrmAttr, 3, gl.FLOAT, false, 0, 0);
    gl.drawArrays(gl.TRIANGLES, 0, this.vertexCount);
  }
}
