/**
 * WebGL2 splat renderer: depth-sorted instanced quads with the standard
 * EWA-style screen-space covariance, Gaussian falloff and DC color (no SH
 * bands — matching the server-side reference renderer's fidelity).
 */

import { OrbitCamera } from "./camera.js";

const VERT = `#version 300 es
precision highp float;
layout(location=0) in vec2 corner;        // quad corner in [-1,1]
layout(location=1) in vec3 center;        // skinned world position
layout(location=2) in vec4 rot;           // skinned quaternion wxyz
layout(location=3) in vec3 scale;
layout(location=4) in vec4 colorOpacity;  // rgb, alpha

uniform mat4 uView;
uniform mat4 uProj;
uniform vec2 uViewport;
uniform float uFocal;

out vec4 vColor;
out vec2 vUv;

mat3 quatToMat(vec4 q) {
  float w=q.x, x=q.y, y=q.z, z=q.w;
  return mat3(
    1.-2.*(y*y+z*z), 2.*(x*y+w*z),   2.*(x*z-w*y),
    2.*(x*y-w*z),    1.-2.*(x*x+z*z),2.*(y*z+w*x),
    2.*(x*z+w*y),    2.*(y*z-w*x),   1.-2.*(x*x+y*y));
}

void main() {
  vec4 camPos = uView * vec4(center, 1.0);
  if (camPos.z < 0.05) { gl_Position = vec4(0., 0., 2., 1.); return; }

  mat3 R = quatToMat(rot);
  mat3 S = mat3(scale.x,0.,0., 0.,scale.y,0., 0.,0.,scale.z);
  mat3 M = R * S;
  mat3 cov3 = M * transpose(M);

  float z2 = camPos.z * camPos.z;
  mat3 J = mat3(
    uFocal/camPos.z, 0., -uFocal*camPos.x/z2,
    0., uFocal/camPos.z, -uFocal*camPos.y/z2,
    0., 0., 0.);
  mat3 W = transpose(mat3(uView));
  mat3 T = W * J;
  mat3 cov2 = transpose(T) * cov3 * T;

  float a = cov2[0][0] + 0.3;
  float d = cov2[1][1] + 0.3;
  float b = cov2[0][1];
  float tr = a + d;
  float det = a * d - b * b;
  float mid = 0.5 * tr;
  float disc = sqrt(max(mid * mid - det, 0.0));
  float l1 = mid + disc, l2 = max(mid - disc, 0.01);
  float r = 3.0 * sqrt(l1);

  vec2 axis1 = normalize(vec2(b, l1 - a));
  if (length(vec2(b, l1 - a)) < 1e-6) axis1 = vec2(1., 0.);
  vec2 axis2 = vec2(-axis1.y, axis1.x);
  vec2 extent = corner.x * axis1 * 3.0 * sqrt(l1) + corner.y * axis2 * 3.0 * sqrt(l2);

  vec4 clip = uProj * camPos;
  vec2 ndcOffset = extent / uViewport * 2.0 * clip.w;
  gl_Position = clip + vec4(ndcOffset, 0., 0.);
  vUv = corner * 3.0;  // 3σ at the quad edge
  vColor = colorOpacity;
}
`;

const FRAG = `#version 300 es
precision highp float;
in vec4 vColor;
in vec2 vUv;
out vec4 frag;
void main() {
  float q = dot(vUv, vUv);
  if (q > 9.0) discard;
  float alpha = vColor.a * exp(-0.5 * q);
  if (alpha < 1.0/255.0) discard;
  frag = vec4(vColor.rgb * alpha, alpha);
}
`;

export interface SplatGroup {
  count: number;
  positions: Float32Array; // dynamic (skinned) or static
  rotations: Float32Array;
  scales: Float32Array;
  colors: Float32Array; // rgb
  opacities: Float32Array;
  dynamic: boolean;
}

export class SplatRenderer {
  private gl: WebGL2RenderingContext;
  private program: WebGLProgram;
  private vao: WebGLVertexArrayObject;
  private buffers: Record<string, WebGLBuffer> = {};
  private capacity = 0;
  private order: Uint32Array = new Uint32Array(0);
  private depths: Float32Array = new Float32Array(0);

  constructor(private canvas: HTMLCanvasElement) {
    const gl = canvas.getContext("webgl2", { antialias: false, alpha: false });
    if (!gl) throw new Error("WebGL2 unavailable");
    this.gl = gl;
    this.program = this.link(VERT, FRAG);
    this.vao = gl.createVertexArray()!;
    gl.bindVertexArray(this.vao);

    const quad = new Float32Array([-1, -1, 1, -1, -1, 1, 1, 1]);
    const qb = gl.createBuffer()!;
    gl.bindBuffer(gl.ARRAY_BUFFER, qb);
    gl.bufferData(gl.ARRAY_BUFFER, quad, gl.STATIC_DRAW);
    gl.enableVertexAttribArray(0);
    gl.vertexAttribPointer(0, 2, gl.FLOAT, false, 0, 0);

    for (const [loc, comps, name] of [
      [1, 3, "center"],
      [2, 4, "rot"],
      [3, 3, "scale"],
      [4, 4, "color"],
    ] as const) {
      const buf = gl.createBuffer()!;
      this.buffers[name] = buf;
      gl.bindBuffer(gl.ARRAY_BUFFER, buf);
      gl.enableVertexAttribArray(loc);
      gl.vertexAttribPointer(loc, comps, gl.FLOAT, false, 0, 0);
      gl.vertexAttribDivisor(loc, 1);
    }
    gl.disable(gl.DEPTH_TEST);
    gl.enable(gl.BLEND);
    // premultiplied front-to-back accumulation is order-dependent; draw
    // back to front with standard premultiplied over
    gl.blendFunc(gl.ONE, gl.ONE_MINUS_SRC_ALPHA);
  }

  private link(vsrc: string, fsrc: string): WebGLProgram {
    const gl = this.gl;
    const compile = (type: number, src: string) => {
      const sh = gl.createShader(type)!;
      gl.shaderSource(sh, src);
      gl.compileShader(sh);
      if (!gl.getShaderParameter(sh, gl.COMPILE_STATUS)) {
        throw new Error(gl.getShaderInfoLog(sh) ?? "shader compile failed");
      }
      return sh;
    };
    const prog = gl.createProgram()!;
    gl.attachShader(prog, compile(gl.VERTEX_SHADER, vsrc));
    gl.attachShader(prog, compile(gl.FRAGMENT_SHADER, fsrc));
    gl.linkProgram(prog);
    if (!gl.getProgramParameter(prog, gl.LINK_STATUS)) {
      throw new Error(gl.getProgramInfoLog(prog) ?? "program link failed");
    }
    return prog;
  }

  /** Depth sort (16-bit counting sort) and draw all groups merged. */
  render(groups: SplatGroup[], camera: OrbitCamera): void {
    const gl = this.gl;
    const total = groups.reduce((n, g) => n + g.count, 0);
    if (total === 0) return;
    if (total > this.capacity) {
      this.capacity = total;
      this.order = new Uint32Array(total);
      this.depths = new Float32Array(total);
    }

    const view = camera.viewMatrix();
    // depth = view-space z (third row of the world→view transform)
    const r2 = [view[2], view[6], view[10], view[14]];
    let off = 0;
    for (const g of groups) {
      const p = g.positions;
      for (let i = 0; i < g.count; i++) {
        this.depths[off + i] =
          r2[0] * p[i * 3] + r2[1] * p[i * 3 + 1] + r2[2] * p[i * 3 + 2] + r2[3];
      }
      off += g.count;
    }
    this.countingSort(total);

    // gather sorted attributes (back to front)
    const center = new Float32Array(total * 3);
    const rot = new Float32Array(total * 4);
    const scale = new Float32Array(total * 3);
    const color = new Float32Array(total * 4);
    const starts: number[] = [];
    {
      let s = 0;
      for (const g of groups) {
        starts.push(s);
        s += g.count;
      }
    }
    const groupOf = (gi: number) => {
      let lo = 0;
      while (lo + 1 < starts.length && starts[lo + 1] <= gi) lo++;
      return lo;
    };
    for (let k = 0; k < total; k++) {
      const src = this.order[total - 1 - k]; // farthest first
      const gi = groupOf(src);
      const g = groups[gi];
      const i = src - starts[gi];
      center.set(g.positions.subarray(i * 3, i * 3 + 3), k * 3);
      rot.set(g.rotations.subarray(i * 4, i * 4 + 4), k * 4);
      scale.set(g.scales.subarray(i * 3, i * 3 + 3), k * 3);
      color[k * 4] = g.colors[i * 3];
      color[k * 4 + 1] = g.colors[i * 3 + 1];
      color[k * 4 + 2] = g.colors[i * 3 + 2];
      color[k * 4 + 3] = g.opacities[i];
    }

    const upload = (name: string, data: Float32Array) => {
      gl.bindBuffer(gl.ARRAY_BUFFER, this.buffers[name]);
      gl.bufferData(gl.ARRAY_BUFFER, data, gl.DYNAMIC_DRAW);
    };
    upload("center", center);
    upload("rot", rot);
    upload("scale", scale);
    upload("color", color);

    const w = this.canvas.width;
    const h = this.canvas.height;
    gl.viewport(0, 0, w, h);
    gl.clearColor(0.03, 0.03, 0.05, 1);
    gl.clear(gl.COLOR_BUFFER_BIT);
    gl.useProgram(this.program);
    gl.bindVertexArray(this.vao);
    const focal = h / (2 * Math.tan(camera.fovY / 2));
    gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uView"), false, view);
    gl.uniformMatrix4fv(
      gl.getUniformLocation(this.program, "uProj"), false, camera.projectionMatrix(w / h)
    );
    gl.uniform2f(gl.getUniformLocation(this.program, "uViewport"), w, h);
    gl.uniform1f(gl.getUniformLocation(this.program, "uFocal"), focal);
    gl.drawArraysInstanced(gl.TRIANGLE_STRIP, 0, 4, total);
  }

  private countingSort(n: number): void {
    // quantize depths to 16 bits between min and max
    let lo = Infinity, hi = -Infinity;
    for (let i = 0; i < n; i++) {
      const d = this.depths[i];
      if (d < lo) lo = d;
      if (d > hi) hi = d;
    }
    const span = hi - lo || 1;
    const buckets = 1 << 16;
    const counts = new Uint32Array(buckets + 1);
    const keys = new Uint32Array(n);
    for (let i = 0; i < n; i++) {
      const k = Math.min(buckets - 1, Math.floor(((this.depths[i] - lo) / span) * (buckets - 1)));
      keys[i] = k;
      counts[k + 1]++;
    }
    for (let b = 0; b < buckets; b++) counts[b + 1] += counts[b];
    for (let i = 0; i < n; i++) {
      this.order[counts[keys[i]]++] = i;
    }
  }
}
