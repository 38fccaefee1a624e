/**
 * Binary wire protocol (client side).
 *
 * Message = 1 type byte + payload, integers little-endian, floats float32.
 * INIT carries the rest-pose splat buffers and binding tables; FRAME carries
 * per-particle (ΔT, ΔR) so this client runs the skinning math itself.
 */

export const PROTOCOL_VERSION = 1;

export const MSG_INIT = 0x01;
export const MSG_FRAME = 0x02;
export const MSG_GRAB = 0x10;
export const MSG_DRAG = 0x11;
export const MSG_RELEASE = 0x12;
export const MSG_SPAWN = 0x13;
export const MSG_ERROR = 0x7f;

export const ERR_MALFORMED = 1;
export const ERR_NOT_OWNER = 2;

const CATEGORY_NAMES = ["deformation", "rigid", "granular"] as const;

export class ProtocolError extends Error {}

export interface SceneBlock {
  count: number;
  positions: Float32Array; // count*3
  scales: Float32Array; // count*3
  rotations: Float32Array; // count*4, wxyz
  opacities: Float32Array; // count
  colors: Float32Array; // count*3, already linear DC color
}

export interface ObjectInit {
  objectId: number;
  category: (typeof CATEGORY_NAMES)[number];
  m: number;
  particleCount: number;
  scene: SceneBlock;
  indices: Uint32Array; // count*m
  weights: Float32Array; // count*m
  offsetsXd: Float32Array; // count*m*3
}

export interface InitMessage {
  version: number;
  environment: SceneBlock;
  objects: ObjectInit[];
  meta: { objects: { id: number; category: string; mass_kg: number; kernels: number; particles: number }[]; dt: number };
}

export interface ObjectFrame {
  objectId: number;
  dT: Float32Array; // particleCount*3
  dR: Float32Array; // particleCount*4
}

export interface FrameMessage {
  frame: number;
  time: number;
  objects: ObjectFrame[];
}

class Reader {
  private view: DataView;
  private off = 0;
  constructor(private buf: ArrayBuffer) {
    this.view = new DataView(buf);
  }
  private need(n: number) {
    if (this.off + n > this.buf.byteLength) {
      throw new ProtocolError(`message truncated at byte ${this.off} (+${n})`);
    }
  }
  u8(): number {
    this.need(1);
    return this.view.getUint8(this.off++);
  }
  u32(): number {
    this.need(4);
    const v = this.view.getUint32(this.off, true);
    this.off += 4;
    return v;
  }
  f32(): number {
    this.need(4);
    const v = this.view.getFloat32(this.off, true);
    this.off += 4;
    return v;
  }
  f32array(count: number): Float32Array {
    this.need(count * 4);
    // byte offset may be unaligned: copy through a byte view
    const out = new Float32Array(
      this.buf.slice(this.off, this.off + count * 4)
    );
    this.off += count * 4;
    return out;
  }
  u32array(count: number): Uint32Array {
    this.need(count * 4);
    const out = new Uint32Array(this.buf.slice(this.off, this.off + count * 4));
    this.off += count * 4;
    return out;
  }
  bytes(count: number): Uint8Array {
    this.need(count);
    const out = new Uint8Array(this.buf, this.off, count);
    this.off += count;
    return out;
  }
  done() {
    if (this.off !== this.buf.byteLength) {
      throw new ProtocolError(`${this.buf.byteLength - this.off} trailing bytes`);
    }
  }
}

function readSceneBlock(r: Reader): SceneBlock {
  const count = r.u32();
  return {
    count,
    positions: r.f32array(count * 3),
    scales: r.f32array(count * 3),
    rotations: r.f32array(count * 4),
    opacities: r.f32array(count),
    colors: r.f32array(count * 3),
  };
}

export function decodeInit(buf: ArrayBuffer): InitMessage {
  const r = new Reader(buf);
  if (r.u8() !== MSG_INIT) throw new ProtocolError("not an INIT message");
  const version = r.u32();
  if (version !== PROTOCOL_VERSION) {
    throw new ProtocolError(`protocol version mismatch: ${version} != ${PROTOCOL_VERSION}`);
  }
  const nObjects = r.u32();
  const environment = readSceneBlock(r);
  const objects: ObjectInit[] = [];
  for (let i = 0; i < nObjects; i++) {
    const objectId = r.u32();
    const category = CATEGORY_NAMES[r.u8()];
    const m = r.u8();
    const particleCount = r.u32();
    const scene = readSceneBlock(r);
    objects.push({
      objectId,
      category,
      m,
      particleCount,
      scene,
      indices: r.u32array(scene.count * m),
      weights: r.f32array(scene.count * m),
      offsetsXd: r.f32array(scene.count * m * 3),
    });
  }
  const metaLen = r.u32();
  const meta = JSON.parse(new TextDecoder().decode(r.bytes(metaLen)));
  r.done();
  return { version, environment, objects, meta };
}

export function decodeFrame(buf: ArrayBuffer): FrameMessage {
  const r = new Reader(buf);
  if (r.u8() !== MSG_FRAME) throw new ProtocolError("not a FRAME message");
  const frame = r.u32();
  const time = r.f32();
  const nObjects = r.u32();
  const objects: ObjectFrame[] = [];
  for (let i = 0; i < nObjects; i++) {
    const objectId = r.u32();
    const count = r.u32();
    objects.push({
      objectId,
      dT: r.f32array(count * 3),
      dR: r.f32array(count * 4),
    });
  }
  r.done();
  return { frame, time, objects };
}

export function decodeError(buf: ArrayBuffer): { code: number; message: string } {
  const r = new Reader(buf);
  if (r.u8() !== MSG_ERROR) throw new ProtocolError("not an ERROR message");
  const view = new DataView(buf);
  const code = view.getUint16(1, true);
  const len = view.getUint16(3, true);
  const message = new TextDecoder().decode(new Uint8Array(buf, 5, len));
  return { code, message };
}

export function messageType(buf: ArrayBuffer): number {
  if (buf.byteLength < 1) throw new ProtocolError("empty message");
  return new DataView(buf).getUint8(0);
}

function packFloats(type: number, values: number[]): ArrayBuffer {
  const buf = new ArrayBuffer(1 + values.length * 4);
  const view = new DataView(buf);
  view.setUint8(0, type);
  values.forEach((v, i) => view.setFloat32(1 + i * 4, v, true));
  return buf;
}

export type Vec3 = [number, number, number];

export function encodeGrab(origin: Vec3, direction: Vec3): ArrayBuffer {
  return packFloats(MSG_GRAB, [...origin, ...direction]);
}

export function encodeDrag(target: Vec3): ArrayBuffer {
  return packFloats(MSG_DRAG, [...target]);
}

export function encodeRelease(): ArrayBuffer {
  return new Uint8Array([MSG_RELEASE]).buffer;
}

export function encodeSpawn(origin: Vec3, velocity: Vec3, radius: number, mass: number): ArrayBuffer {
  return packFloats(MSG_SPAWN, [...origin, ...velocity, radius, mass]);
}
