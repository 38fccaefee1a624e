/**
 * Client-side kernel skinning — the same math the server runs:
 *
 *   T' = Σ wᵢ ΔTᵢ
 *   R' = normalize(Σ wᵢ ±ΔRᵢ)        signs aligned to the first entry
 *   Tq = Σ wᵢ (ΔRᵢ X_d ΔRᵢ⁻¹ − X_d)
 *   T  = T_r + T' + Tq,  R = R' ⊗ R_r
 *
 * Quaternions are (w, x, y, z). Runs on the CPU over typed arrays; golden
 * tests compare this path against recorded server reference buffers.
 */

import type { ObjectFrame, ObjectInit } from "./protocol.js";

export interface SkinnedBuffers {
  positions: Float32Array; // count*3
  rotations: Float32Array; // count*4
}

export function allocateSkinned(count: number): SkinnedBuffers {
  return {
    positions: new Float32Array(count * 3),
    rotations: new Float32Array(count * 4),
  };
}

/** Skin one object's kernels from its particle deltas. Returns the number
 * of kernels that hit the zero-blend fallback. */
export function skinObject(
  obj: ObjectInit,
  dT: Float32Array,
  dR: Float32Array,
  out: SkinnedBuffers
): number {
  const { count } = obj.scene;
  const m = obj.m;
  const idx = obj.indices;
  const w = obj.weights;
  const xd = obj.offsetsXd;
  const restPos = obj.scene.positions;
  const restRot = obj.scene.rotations;
  const outP = out.positions;
  const outR = out.rotations;
  let fallbacks = 0;

  for (let i = 0; i < count; i++) {
    const ref = idx[i * m] * 4;
    const refW = dR[ref], refX = dR[ref + 1], refY = dR[ref + 2], refZ = dR[ref + 3];

    let tbx = 0, tby = 0, tbz = 0;
    let qw = 0, qx = 0, qy = 0, qz = 0;
    let tqx = 0, tqy = 0, tqz = 0;

    for (let j = 0; j < m; j++) {
      const p = idx[i * m + j];
      const wj = w[i * m + j];
      const p3 = p * 3, p4 = p * 4;

      tbx += wj * dT[p3];
      tby += wj * dT[p3 + 1];
      tbz += wj * dT[p3 + 2];

      const dw = dR[p4], dx = dR[p4 + 1], dy = dR[p4 + 2], dz = dR[p4 + 3];
      const s = dw * refW + dx * refX + dy * refY + dz * refZ >= 0 ? 1 : -1;
      qw += wj * s * dw;
      qx += wj * s * dx;
      qy += wj * s * dy;
      qz += wj * s * dz;

      // rotate X_d by ΔR: t = 2 q.xyz × v; v' = v + w t + q.xyz × t
      const o = (i * m + j) * 3;
      const vx = xd[o], vy = xd[o + 1], vz = xd[o + 2];
      const tx = 2 * (dy * vz - dz * vy);
      const ty = 2 * (dz * vx - dx * vz);
      const tz = 2 * (dx * vy - dy * vx);
      tqx += wj * (dw * tx + (dy * tz - dz * ty));
      tqy += wj * (dw * ty + (dz * tx - dx * tz));
      tqz += wj * (dw * tz + (dx * ty - dy * tx));
    }

    const norm = Math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (norm < 1e-8) {
      qw = refW; qx = refX; qy = refY; qz = refZ;
      fallbacks++;
    } else {
      qw /= norm; qx /= norm; qy /= norm; qz /= norm;
    }

    outP[i * 3] = restPos[i * 3] + tbx + tqx;
    outP[i * 3 + 1] = restPos[i * 3 + 1] + tby + tqy;
    outP[i * 3 + 2] = restPos[i * 3 + 2] + tbz + tqz;

    const rw = restRot[i * 4], rx = restRot[i * 4 + 1];
    const ry = restRot[i * 4 + 2], rz = restRot[i * 4 + 3];
    outR[i * 4] = qw * rw - qx * rx - qy * ry - qz * rz;
    outR[i * 4 + 1] = qw * rx + qx * rw + qy * rz - qz * ry;
    outR[i * 4 + 2] = qw * ry - qx * rz + qy * rw + qz * rx;
    outR[i * 4 + 3] = qw * rz + qx * ry - qy * rx + qz * rw;
  }
  return fallbacks;
}

/** Apply a full FRAME onto the per-object skinned buffers. Returns false
 * (frame dropped) when the frame does not match the binding tables. */
export function applyFrame(
  objects: ObjectInit[],
  frame: { objects: ObjectFrame[] },
  out: Map<number, SkinnedBuffers>
): boolean {
  const byId = new Map(frame.objects.map((o) => [o.objectId, o]));
  for (const obj of objects) {
    const delta = byId.get(obj.objectId);
    if (!delta || delta.dT.length !== obj.particleCount * 3) {
      return false;
    }
  }
  for (const obj of objects) {
    const delta = byId.get(obj.objectId)!;
    let buffers = out.get(obj.objectId);
    if (!buffers) {
      buffers = allocateSkinned(obj.scene.count);
      out.set(obj.objectId, buffers);
    }
    skinObject(obj, delta.dT, delta.dR, buffers);
  }
  return true;
}
