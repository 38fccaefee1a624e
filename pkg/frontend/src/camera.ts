/**
 * Orbit + fly camera with ray unprojection for picking.
 * Right-handed world, camera looks along +z in view space (matching the
 * server's pinhole convention: +x right, +y down in the image).
 */

import type { Vec3 } from "./protocol.js";

export class OrbitCamera {
  target: Vec3 = [0, 0.1, 0];
  azimuth = 0.6;
  elevation = 0.5;
  distance = 2.2;
  fovY = (50 * Math.PI) / 180;

  eye(): Vec3 {
    const ce = Math.cos(this.elevation);
    return [
      this.target[0] + this.distance * ce * Math.sin(this.azimuth),
      this.target[1] + this.distance * Math.sin(this.elevation),
      this.target[2] + this.distance * ce * Math.cos(this.azimuth),
    ];
  }

  orbit(dAzimuth: number, dElevation: number): void {
    this.azimuth += dAzimuth;
    this.elevation = Math.min(Math.max(this.elevation + dElevation, -1.45), 1.45);
  }

  dolly(factor: number): void {
    this.distance = Math.min(Math.max(this.distance * factor, 0.2), 30);
  }

  pan(dx: number, dy: number): void {
    const [right, up] = this.basis();
    for (let i = 0; i < 3; i++) {
      this.target[i] += right[i] * dx + up[i] * dy;
    }
  }

  /** Camera basis: right, up, forward (unit, world space). */
  basis(): [Vec3, Vec3, Vec3] {
    const eye = this.eye();
    const fwd = norm3(sub3(this.target, eye));
    const right = norm3(cross3(fwd, [0, 1, 0]));
    const down = cross3(fwd, right);
    const up: Vec3 = [-down[0], -down[1], -down[2]];
    return [right, up, fwd];
  }

  /** World→view rotation rows (right, down, forward) and translation. */
  viewRotation(): number[] {
    const [right, up, fwd] = this.basis();
    return [right[0], right[1], right[2], -up[0], -up[1], -up[2], fwd[0], fwd[1], fwd[2]];
  }

  viewMatrix(): Float32Array {
    const r = this.viewRotation();
    const eye = this.eye();
    const t = [
      -(r[0] * eye[0] + r[1] * eye[1] + r[2] * eye[2]),
      -(r[3] * eye[0] + r[4] * eye[1] + r[5] * eye[2]),
      -(r[6] * eye[0] + r[7] * eye[1] + r[8] * eye[2]),
    ];
    // column-major 4×4
    return new Float32Array([
      r[0], r[3], r[6], 0,
      r[1], r[4], r[7], 0,
      r[2], r[5], r[8], 0,
      t[0], t[1], t[2], 1,
    ]);
  }

  projectionMatrix(aspect: number, near = 0.02, far = 100): Float32Array {
    const f = 1 / Math.tan(this.fovY / 2);
    // view space is +z forward, +y down: flip y and keep z positive-forward
    return new Float32Array([
      f / aspect, 0, 0, 0,
      0, -f, 0, 0,
      0, 0, (far + near) / (far - near), 1,
      0, 0, (-2 * far * near) / (far - near), 0,
    ]);
  }

  /** Pick ray through normalized device coords (x,y in [-1,1], y up). */
  rayThrough(ndcX: number, ndcY: number, aspect: number): { origin: Vec3; direction: Vec3 } {
    const [right, up, fwd] = this.basis();
    const tanF = Math.tan(this.fovY / 2);
    const dir: Vec3 = [0, 0, 0];
    for (let i = 0; i < 3; i++) {
      dir[i] = fwd[i] + right[i] * ndcX * tanF * aspect + up[i] * ndcY * tanF;
    }
    return { origin: this.eye(), direction: norm3(dir) };
  }
}

export function sub3(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function cross3(a: Vec3, b: Vec3): Vec3 {
  return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
}

export function norm3(a: Vec3): Vec3 {
  const n = Math.hypot(a[0], a[1], a[2]) || 1;
  return [a[0] / n, a[1] / n, a[2] / n];
}
