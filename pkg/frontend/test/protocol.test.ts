/** Codec unit tests: encode layouts, truncation handling, frame slot. */

import { describe, expect, it } from "vitest";

import { FrameSlot, StreamClient } from "../src/net.js";
import {
  decodeFrame,
  encodeDrag,
  encodeGrab,
  encodeRelease,
  encodeSpawn,
  MSG_DRAG,
  MSG_GRAB,
  MSG_RELEASE,
  MSG_SPAWN,
  ProtocolError,
} from "../src/protocol.js";

function f32(buf: ArrayBuffer, off: number): number {
  return new DataView(buf).getFloat32(off, true);
}

describe("client → server encoders", () => {
  it("GRAB carries origin then direction", () => {
    const buf = encodeGrab([1, 2, 3], [0, 0, 1]);
    expect(buf.byteLength).toBe(1 + 6 * 4);
    expect(new DataView(buf).getUint8(0)).toBe(MSG_GRAB);
    expect([f32(buf, 1), f32(buf, 5), f32(buf, 9)]).toEqual([1, 2, 3]);
    expect([f32(buf, 13), f32(buf, 17), f32(buf, 21)]).toEqual([0, 0, 1]);
  });

  it("DRAG carries the target", () => {
    const buf = encodeDrag([4, 5, 6]);
    expect(buf.byteLength).toBe(13);
    expect(new DataView(buf).getUint8(0)).toBe(MSG_DRAG);
    expect([f32(buf, 1), f32(buf, 5), f32(buf, 9)]).toEqual([4, 5, 6]);
  });

  it("RELEASE is a bare type byte", () => {
    const buf = encodeRelease();
    expect(buf.byteLength).toBe(1);
    expect(new DataView(buf).getUint8(0)).toBe(MSG_RELEASE);
  });

  it("SPAWN carries origin, velocity, radius, mass", () => {
    const buf = encodeSpawn([0, 1, 0], [5, 0, 0], 0.05, 0.2);
    expect(buf.byteLength).toBe(1 + 8 * 4);
    expect(new DataView(buf).getUint8(0)).toBe(MSG_SPAWN);
    expect(f32(buf, 25)).toBeCloseTo(0.05);
    expect(f32(buf, 29)).toBeCloseTo(0.2);
  });
});

describe("frame decoding", () => {
  it("rejects truncated frames", () => {
    const buf = new ArrayBuffer(13);
    const view = new DataView(buf);
    view.setUint8(0, 0x02);
    view.setUint32(1, 0, true);
    view.setFloat32(5, 0, true);
    view.setUint32(9, 3, true); // claims 3 objects, none present
    expect(() => decodeFrame(buf)).toThrow(ProtocolError);
  });
});

describe("frame slot", () => {
  it("keeps only the latest frame and counts drops", () => {
    const slot = new FrameSlot();
    const mk = (n: number) => ({ frame: n, time: 0, objects: [] });
    slot.offer(mk(1));
    slot.offer(mk(2));
    slot.offer(mk(3));
    expect(slot.take()!.frame).toBe(3);
    expect(slot.take()).toBeNull();
    expect(slot.dropped).toBe(2);
    expect(slot.received).toBe(3);
  });
});

describe("stream client robustness", () => {
  function clientWithFakeSocket() {
    const sent: ArrayBuffer[] = [];
    const fake = {
      binaryType: "arraybuffer",
      onopen: null as ((ev: unknown) => void) | null,
      onmessage: null as ((ev: { data: ArrayBuffer }) => void) | null,
      onclose: null as ((ev: unknown) => void) | null,
      onerror: null as ((ev: unknown) => void) | null,
      send: (d: ArrayBuffer) => void sent.push(d),
      close: () => undefined,
    };
    const client = new StreamClient("ws://test", {}, () => fake);
    client.connect();
    return { client, fake, sent };
  }

  it("bad bytes increment the counter without crashing", () => {
    const { client } = clientWithFakeSocket();
    client.handle(new Uint8Array([0xee, 1, 2]).buffer);
    client.handle(new ArrayBuffer(0));
    expect(client.badFrames).toBe(2);
  });

  it("frames before INIT are dropped", () => {
    const { client } = clientWithFakeSocket();
    const buf = new ArrayBuffer(13);
    const view = new DataView(buf);
    view.setUint8(0, 0x02);
    view.setUint32(9, 0, true);
    client.handle(buf);
    expect(client.frames.take()).toBeNull();
    expect(client.badFrames).toBe(1);
  });
});
